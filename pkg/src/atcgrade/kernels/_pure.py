"""Pure-Python kernels: reference implementations of the hot inner loops.

The compiled twin (_speedups.pyx) must stay behavior-identical; the parity
test suite drives both backends on the same inputs.
"""

from __future__ import annotations

from typing import Sequence

BACKEND = "pure"


def overlap_count(a: Sequence[str], b: Sequence[str]) -> int:
    """Size of the multiset intersection of two token sequences."""
    counts: dict[str, int] = {}
    for tok in a:
        counts[tok] = counts.get(tok, 0) + 1
    shared = 0
    for tok in b:
        n = counts.get(tok, 0)
        if n > 0:
            counts[tok] = n - 1
            shared += 1
    return shared


def overlap_ratio(a: Sequence[str], b: Sequence[str]) -> float:
    """Multiset overlap |a & b| / max(|a|, |b|); two empty sequences overlap fully."""
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    return overlap_count(a, b) / float(max(la, lb))


def greedy_match(
    gt_types: Sequence[int],
    gt_tokens: Sequence[Sequence[str]],
    pred_types: Sequence[int],
    pred_tokens: Sequence[Sequence[str]],
    threshold: float,
) -> list[tuple[int, int, float]]:
    """One-to-one assignment among same-type pairs with overlap >= threshold.

    Greedy by descending overlap; ties broken by (gt index, pred index) so
    the result is independent of input ordering given canonical indices.
    Returns (gt_index, pred_index, overlap) triples sorted by gt index.
    """
    candidates: list[tuple[float, int, int]] = []
    for gi in range(len(gt_types)):
        for pi in range(len(pred_types)):
            if gt_types[gi] != pred_types[pi]:
                continue
            ratio = overlap_ratio(gt_tokens[gi], pred_tokens[pi])
            if ratio >= threshold:
                candidates.append((ratio, gi, pi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    gt_used = [False] * len(gt_types)
    pred_used = [False] * len(pred_types)
    pairs: list[tuple[int, int, float]] = []
    for ratio, gi, pi in candidates:
        if gt_used[gi] or pred_used[pi]:
            continue
        gt_used[gi] = True
        pred_used[pi] = True
        pairs.append((gi, pi, ratio))
    pairs.sort(key=lambda p: p[0])
    return pairs


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Token-level edit distance (unit costs)."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[lb]
