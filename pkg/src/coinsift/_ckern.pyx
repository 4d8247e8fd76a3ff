# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for the clustering inner loop.

Floating-point evaluation order matches coinsift._pykern exactly (per-row,
feature index ascending, single accumulator; compiled with FMA contraction
disabled), so both backends produce bit-identical arrays.
"""

import numpy as np

cimport numpy as cnp


def pairwise_sqdist(double[:, ::1] x, double[:, ::1] centers):
    """Squared Euclidean distance of every row to every center, (n, k)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t k = centers.shape[0]
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, m
    cdef double s, diff
    for i in range(n):
        for m in range(k):
            s = 0.0
            for j in range(d):
                diff = x[i, j] - centers[m, j]
                s += diff * diff
            out[i, m] = s
    return out_arr


def assigned_sqdist(double[:, ::1] x, double[:, ::1] centers, cnp.int64_t[::1] labels):
    """Squared distance of each row to its labeled center, (n,)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t m
    cdef double s, diff
    for i in range(n):
        m = labels[i]
        s = 0.0
        for j in range(d):
            diff = x[i, j] - centers[m, j]
            s += diff * diff
        out[i] = s
    return out_arr


def accumulate_centers(double[:, ::1] x, cnp.int64_t[::1] labels, Py_ssize_t k):
    """Per-cluster coordinate sums and member counts, rows folded in order."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t m
    for i in range(n):
        m = labels[i]
        counts[m] += 1
        for j in range(d):
            sums[m, j] += x[i, j]
    return sums_arr, counts_arr
