"""Kernel dispatch: compiled extension when available, NumPy fallback otherwise.

Contract shared by both lanes (rows are assumed unit-normalized, so cosine
is a plain dot product):

    max_cosine(queries (N,D), keys (K,D)) -> (best (N,), argmax (N,) int64)
        Per query row, the maximum dot product over key rows and the index
        of the first row attaining it. K == 0 yields -inf / -1.

    greedy_dedup(embs (N,D), threshold) -> keep mask (N,) bool
        Scan in row order; keep a row iff its dot product with every
        previously kept row is strictly below `threshold`.

Set SBF_PURE_PYTHON=1 to force the fallback lane.
"""

import os

import numpy as np

from . import _kern_py

if os.environ.get("SBF_PURE_PYTHON"):
    _impl = _kern_py
else:
    try:
        from . import _simkern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kern_py

BACKEND = "pure-python" if _impl is _kern_py else "compiled"


def _as_matrix(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def max_cosine(queries: np.ndarray, keys: np.ndarray):
    queries = _as_matrix(queries)
    keys = _as_matrix(keys)
    if queries.ndim != 2 or keys.ndim != 2:
        raise ValueError("max_cosine expects 2-D matrices")
    if keys.shape[0] and queries.shape[1] != keys.shape[1]:
        raise ValueError(
            f"dimension mismatch: {queries.shape[1]} vs {keys.shape[1]}"
        )
    return _impl.max_cosine(queries, keys)


def greedy_dedup(embs: np.ndarray, threshold: float) -> np.ndarray:
    embs = _as_matrix(embs)
    if embs.ndim != 2:
        raise ValueError("greedy_dedup expects a 2-D matrix")
    return _impl.greedy_dedup(embs, float(threshold))
