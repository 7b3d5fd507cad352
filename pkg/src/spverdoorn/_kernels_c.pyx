# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled permutation kernels; same contracts as ``_kernels_py``."""

from libc.stdint cimport int64_t

import numpy as np


def moran_numerators(const double[::1] z, const int64_t[::1] indptr, const int64_t[::1] indices,
                     const double[::1] values, const int64_t[:, ::1] perms):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m_count = perms.shape[0]
    cdef Py_ssize_t m, i, k
    cdef double acc, lag
    out = np.empty(m_count)
    cdef double[::1] res = out
    cdef double[::1] zp = np.empty(n)
    with nogil:
        for m in range(m_count):
            for i in range(n):
                zp[i] = z[perms[m, i]]
            acc = 0.0
            for i in range(n):
                lag = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    lag = lag + values[k] * zp[indices[k]]
                acc = acc + zp[i] * lag
            res[m] = acc
    return out


def conditional_lags(const double[::1] z, const int64_t[::1] indptr, const int64_t[::1] indices,
                     const double[::1] values, const int64_t[:, ::1] draws):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m_count = draws.shape[0]
    cdef Py_ssize_t i, m, k, lo, j
    cdef double lag
    out = np.zeros((n, m_count))
    cdef double[:, ::1] res = out
    with nogil:
        for i in range(n):
            lo = indptr[i]
            for m in range(m_count):
                lag = 0.0
                for k in range(indptr[i + 1] - lo):
                    j = draws[m, k]
                    if j >= i:
                        j = j + 1
                    lag = lag + values[lo + k] * z[j]
                res[i, m] = lag
    return out
