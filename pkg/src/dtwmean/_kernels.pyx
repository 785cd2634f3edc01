# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: constrained DTW accumulation and interval scores."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def dtw_matrix(const double[::1] s, const double[::1] t,
               const cnp.intp_t[::1] lo, const cnp.intp_t[::1] hi):
    """Accumulated squared-cost matrix of the windowed DTW recursion.

    Column ``j`` only admits rows ``lo[j] <= i <= hi[j]`` (0-based, inclusive).
    Cells outside the window hold ``inf``.
    """
    cdef Py_ssize_t m = s.shape[0]
    cdef Py_ssize_t n = t.shape[0]
    out = np.full((m, n), np.inf)
    cdef double[:, ::1] acc = out
    cdef Py_ssize_t i, j, a, b
    cdef double best, prev, diff
    for j in range(n):
        a = lo[j]
        b = hi[j]
        if a < 0:
            a = 0
        if b > m - 1:
            b = m - 1
        for i in range(a, b + 1):
            diff = s[i] - t[j]
            if i == 0 and j == 0:
                acc[0, 0] = diff * diff
                continue
            best = INFINITY
            if i > 0 and j > 0:
                prev = acc[i - 1, j - 1]
                if prev < best:
                    best = prev
            if i > 0:
                prev = acc[i - 1, j]
                if prev < best:
                    best = prev
            if j > 0:
                prev = acc[i, j - 1]
                if prev < best:
                    best = prev
            if best != INFINITY:
                acc[i, j] = best + diff * diff
    return out


def interval_max(const double[::1] values, Py_ssize_t a, Py_ssize_t b, double level):
    """Maximum of ``sum(values[x:y]) - level * (y - x)`` over ``a <= x < y <= b + 1``.

    Enumerates all subintervals of ``values[a:b + 1]`` through prefix sums.
    """
    cdef Py_ssize_t n = b - a + 1
    cdef Py_ssize_t x, y
    cdef double[::1] prefix = np.zeros(n + 1)
    for x in range(n):
        prefix[x + 1] = prefix[x] + values[a + x]
    cdef double best = -INFINITY
    cdef double score
    for x in range(n):
        for y in range(x + 1, n + 1):
            score = (prefix[y] - prefix[x]) - level * (y - x)
            if score > best:
                best = score
    return best
