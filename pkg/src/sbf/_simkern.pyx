# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled similarity kernels (hot loops of grounding, dedup and matching).

Same contract as `sbf._kern_py`; selected at import by `sbf.kernels`.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _dot(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0
    cdef Py_ssize_t m = 0
    while m + 8 <= d:
        s0 += a[m] * b[m]
        s1 += a[m + 1] * b[m + 1]
        s2 += a[m + 2] * b[m + 2]
        s3 += a[m + 3] * b[m + 3]
        s4 += a[m + 4] * b[m + 4]
        s5 += a[m + 5] * b[m + 5]
        s6 += a[m + 6] * b[m + 6]
        s7 += a[m + 7] * b[m + 7]
        m += 8
    while m < d:
        s0 += a[m] * b[m]
        m += 1
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


def max_cosine(double[:, ::1] queries, double[:, ::1] keys):
    cdef Py_ssize_t n = queries.shape[0]
    cdef Py_ssize_t k = keys.shape[0]
    cdef Py_ssize_t d = queries.shape[1]

    best_arr = np.full(n, -np.inf, dtype=np.float64)
    idx_arr = np.full(n, -1, dtype=np.int64)
    if n == 0 or k == 0:
        return best_arr, idx_arr

    cdef double[::1] best = best_arr
    cdef long long[::1] idx = idx_arr
    cdef Py_ssize_t i, j
    cdef double dot

    with nogil:
        for i in range(n):
            for j in range(k):
                dot = _dot(&queries[i, 0], &keys[j, 0], d)
                if dot > best[i]:
                    best[i] = dot
                    idx[i] = j
    return best_arr, idx_arr


def greedy_dedup(double[:, ::1] embs, double threshold):
    cdef Py_ssize_t n = embs.shape[0]
    cdef Py_ssize_t d = embs.shape[1]

    keep_arr = np.zeros(n, dtype=bool)
    if n == 0:
        return keep_arr

    cdef cnp.uint8_t[::1] keep = keep_arr.view(np.uint8)
    cdef Py_ssize_t i, j
    cdef bint ok

    with nogil:
        for i in range(n):
            ok = True
            for j in range(i):
                if not keep[j]:
                    continue
                if _dot(&embs[i, 0], &embs[j, 0], d) >= threshold:
                    ok = False
                    break
            if ok:
                keep[i] = True
    return keep_arr
