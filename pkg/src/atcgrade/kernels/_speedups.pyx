# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels for the matching hot path.

Behavior-identical twin of _pure.py; the parity tests assert equality on
randomized inputs. Token values stay Python strings (they are short and
interned by the tokenizer); the win comes from typed loops and C arrays
in the pairwise-overlap and edit-distance inner loops.
"""

from libc.stdlib cimport free, malloc

BACKEND = "compiled"


cpdef int overlap_count(a, b):
    """Size of the multiset intersection of two token sequences."""
    cdef dict counts = {}
    cdef int shared = 0
    cdef int n
    for tok in a:
        counts[tok] = <int> counts.get(tok, 0) + 1
    for tok in b:
        n = <int> counts.get(tok, 0)
        if n > 0:
            counts[tok] = n - 1
            shared += 1
    return shared


cpdef double overlap_ratio(a, b):
    """Multiset overlap |a & b| / max(|a|, |b|); two empty sequences overlap fully."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    return overlap_count(a, b) / <double> max(la, lb)


def greedy_match(gt_types, gt_tokens, pred_types, pred_tokens, double threshold):
    """One-to-one assignment among same-type pairs with overlap >= threshold.

    Greedy by descending overlap; ties broken by (gt index, pred index).
    Returns (gt_index, pred_index, overlap) triples sorted by gt index.
    """
    cdef Py_ssize_t ng = len(gt_types)
    cdef Py_ssize_t np = len(pred_types)
    cdef Py_ssize_t gi, pi
    cdef double ratio
    cdef list candidates = []
    for gi in range(ng):
        for pi in range(np):
            if gt_types[gi] != pred_types[pi]:
                continue
            ratio = overlap_ratio(gt_tokens[gi], pred_tokens[pi])
            if ratio >= threshold:
                candidates.append((-ratio, gi, pi))
    candidates.sort()
    cdef list pairs = []
    cdef char *gt_used = <char *> malloc(ng if ng > 0 else 1)
    cdef char *pred_used = <char *> malloc(np if np > 0 else 1)
    if gt_used == NULL or pred_used == NULL:
        free(gt_used)
        free(pred_used)
        raise MemoryError()
    try:
        for gi in range(ng):
            gt_used[gi] = 0
        for pi in range(np):
            pred_used[pi] = 0
        for neg_ratio, gi, pi in candidates:
            if gt_used[gi] or pred_used[pi]:
                continue
            gt_used[gi] = 1
            pred_used[pi] = 1
            pairs.append((gi, pi, -neg_ratio))
    finally:
        free(gt_used)
        free(pred_used)
    pairs.sort()
    return pairs


def levenshtein(a, b):
    """Token-level edit distance (unit costs)."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    # Encode tokens as small ints so the DP loop never touches Python objects.
    cdef dict vocab = {}
    cdef Py_ssize_t i, j
    cdef int *ea = <int *> malloc(la * sizeof(int))
    cdef int *eb = <int *> malloc(lb * sizeof(int))
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if ea == NULL or eb == NULL or prev == NULL or cur == NULL:
        free(ea); free(eb); free(prev); free(cur)
        raise MemoryError()
    cdef int cost, best, via
    cdef int result
    try:
        for i in range(la):
            ea[i] = <int> vocab.setdefault(a[i], len(vocab))
        for j in range(lb):
            eb[j] = <int> vocab.setdefault(b[j], len(vocab))
        for j in range(lb + 1):
            prev[j] = <int> j
        for i in range(1, la + 1):
            cur[0] = <int> i
            for j in range(1, lb + 1):
                cost = 0 if ea[i - 1] == eb[j - 1] else 1
                best = prev[j] + 1
                via = cur[j - 1] + 1
                if via < best:
                    best = via
                via = prev[j - 1] + cost
                if via < best:
                    best = via
                cur[j] = best
            prev, cur = cur, prev
        result = prev[lb]
    finally:
        free(ea); free(eb); free(prev); free(cur)
    return result
