"""Kernel backend selection.

Prefers the compiled extension when it built successfully; falls back to the
pure-Python twin otherwise. Set ATCGRADE_PURE_KERNELS=1 to force the pure
backend (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("ATCGRADE_PURE_KERNELS") == "1":
    from atcgrade.kernels import _pure as _impl
else:
    try:
        from atcgrade.kernels import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from atcgrade.kernels import _pure as _impl

BACKEND: str = _impl.BACKEND
overlap_count = _impl.overlap_count
overlap_ratio = _impl.overlap_ratio
greedy_match = _impl.greedy_match
levenshtein = _impl.levenshtein

__all__ = ["BACKEND", "overlap_count", "overlap_ratio", "greedy_match", "levenshtein"]
