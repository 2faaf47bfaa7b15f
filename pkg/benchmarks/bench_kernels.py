#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot inner loops (multiset overlap, greedy one-to-one
matching, token edit distance) on synthetic workloads shaped like real
evaluation traffic, then times one full end-to-end evaluation of a
1000-utterance corpus under each backend.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import os
import random
import statistics
import subprocess
import sys
import time

from atcgrade.kernels import _pure

try:
    from atcgrade.kernels import _speedups
except ImportError:
    _speedups = None


def make_workload(seed=7, n_pairs=4000, n_instances=1500):
    rng = random.Random(seed)
    vocab = [
        "singapore", "jetstar", "three", "two", "one", "niner", "alpha",
        "bravo", "runway", "02l", "e1", "hold", "short", "ground",
    ]

    def seq(lo=1, hi=8):
        return tuple(rng.choice(vocab) for _ in range(rng.randrange(lo, hi)))

    pairs = [(seq(), seq()) for _ in range(n_pairs)]

    instances = []
    for _ in range(n_instances):
        k1, k2 = rng.randrange(0, 7), rng.randrange(0, 7)
        instances.append((
            [rng.randrange(3) for _ in range(k1)], [seq(1, 6) for _ in range(k1)],
            [rng.randrange(3) for _ in range(k2)], [seq(1, 6) for _ in range(k2)],
        ))
    lev_pairs = [(seq(4, 14), seq(4, 14)) for _ in range(n_pairs)]
    return pairs, instances, lev_pairs


def bench(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def run_kernel_benchmarks(repeats):
    pairs, instances, lev_pairs = make_workload()
    backends = [("pure", _pure)]
    if _speedups is not None:
        backends.append(("compiled", _speedups))

    jobs = {
        "overlap_ratio x4000": lambda mod: [mod.overlap_ratio(a, b) for a, b in pairs],
        "greedy_match x1500": lambda mod: [
            mod.greedy_match(gt_t, gt_x, p_t, p_x, 0.9) for gt_t, gt_x, p_t, p_x in instances
        ],
        "levenshtein x4000": lambda mod: [mod.levenshtein(a, b) for a, b in lev_pairs],
    }

    print(f"{'kernel':<22} {'backend':<10} {'best':>10} {'median':>10}   speedup")
    for name, job in jobs.items():
        baseline = None
        for backend_name, mod in backends:
            best, median = bench(lambda: job(mod), repeats)
            if backend_name == "pure":
                baseline = best
            speedup = f"{baseline / best:5.2f}x" if backend_name != "pure" else "  1.00x"
            print(f"{name:<22} {backend_name:<10} {best * 1e3:9.2f}ms {median * 1e3:9.2f}ms  {speedup}")


END_TO_END_SNIPPET = """
import time
from atcgrade.kernels import BACKEND
from atcgrade.baseline_parser import parse_corpus
from atcgrade.corpus_io import generate_synthetic_corpus
from atcgrade.report import build_report
from atcgrade.schema import default_weight_config

cfg = default_weight_config()
corpus = generate_synthetic_corpus(seed=1, n=1000)
preds = parse_corpus(corpus)
start = time.perf_counter()
build_report(corpus, preds, cfg)
print(f"  {BACKEND:<10} evaluate n=1000: {time.perf_counter() - start:.3f}s")
"""


def run_end_to_end():
    print("\nfull evaluation (subprocess per backend):", flush=True)
    for env_value in ("0", "1"):
        env = dict(os.environ)
        env["ATCGRADE_PURE_KERNELS"] = env_value
        subprocess.run([sys.executable, "-c", END_TO_END_SNIPPET], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if _speedups is None:
        print("note: compiled kernels unavailable, timing pure backend only")
    run_kernel_benchmarks(args.repeats)
    run_end_to_end()


if __name__ == "__main__":
    main()
