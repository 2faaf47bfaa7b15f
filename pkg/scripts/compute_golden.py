#!/usr/bin/env python3
"""Regenerate tests/data/golden_expected.json from the brute-force oracles.

Uses only the oracle implementations in tests/oracles.py for every metric
value (file loading and the weight table are shared data plumbing, not
scoring logic). Run from the repository root:

    python scripts/compute_golden.py
"""

import json
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "tests"))

import oracles  # noqa: E402

from atcgrade.corpus_io import load_corpus, load_predictions  # noqa: E402
from atcgrade.schema import default_weight_config  # noqa: E402


def main() -> None:
    data_dir = os.path.join(ROOT, "tests", "data")
    cfg = default_weight_config()
    corpus = load_corpus(os.path.join(data_dir, "golden_corpus.jsonl"), cfg)
    preds = load_predictions(os.path.join(data_dir, "golden_predictions.jsonl"))

    metrics = oracles.oracle_all_metrics(corpus, preds, cfg)
    per_entity = oracles.oracle_per_entity_accuracy(corpus, preds, cfg.overlap_threshold)
    strata = oracles.oracle_risk_stratified(corpus, preds, cfg)
    known = {u.id for u in corpus.utterances}

    expected = {
        "metrics": metrics,
        "per_entity_accuracy": {t.value: v for t, v in sorted(per_entity.items())},
        "per_risk_level": {
            level.value: {"type_accuracy": acc[0], "slot_accuracy": acc[1]}
            for level, acc in sorted(strata.items())
        },
        "mean_latency_seconds": oracles.oracle_mean_latency(preds, known),
    }
    out_path = os.path.join(data_dir, "golden_expected.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    for key, value in metrics.items():
        print(f"  {key}: {value!r}")


if __name__ == "__main__":
    main()
