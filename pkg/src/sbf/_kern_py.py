"""Pure NumPy implementations of the similarity kernels.

Fallback lane used when the compiled extension is unavailable (or when
SBF_PURE_PYTHON is set). Both lanes share the contract documented in
`sbf.kernels`; inputs are float64 C-contiguous matrices of unit rows.
"""

import numpy as np


def max_cosine(queries: np.ndarray, keys: np.ndarray):
    n = queries.shape[0]
    if n == 0 or keys.shape[0] == 0:
        return (
            np.full(n, -np.inf, dtype=np.float64),
            np.full(n, -1, dtype=np.int64),
        )
    sims = queries @ keys.T
    return sims.max(axis=1), sims.argmax(axis=1).astype(np.int64)


def greedy_dedup(embs: np.ndarray, threshold: float) -> np.ndarray:
    n = embs.shape[0]
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    gram = embs @ embs.T
    kept: list[int] = []
    for i in range(n):
        if not kept or gram[i, kept].max() < threshold:
            keep[i] = True
            kept.append(i)
    return keep
