# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise kernels: the hot inner loops of the learner and the
privacy metrics. Fused loops avoid the n x n temporaries the numpy
fallback allocates; semantics must match ``_pairwise_np`` exactly."""

import numpy as np

cimport numpy as cnp

from libc.math cimport INFINITY, exp, sqrt

cnp.import_array()

BACKEND = "compiled"


def sq_dists(double[:, ::1] a, double[:, ::1] b):
    """All-pairs squared Euclidean distances, shape (a.rows, b.rows)."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((na, nb))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    with nogil:
        for i in range(na):
            for j in range(nb):
                acc = 0.0
                for t in range(dim):
                    diff = a[i, t] - b[j, t]
                    acc += diff * diff
                o[i, j] = acc
    return out


def gaussian_gram(double[:, ::1] a, double[:, ::1] b,
                  double[::1] scales_a, double[::1] scales_b):
    """K[i, j] = exp(-||a_i - b_j||^2 / (scales_a[i] * scales_b[j]))."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((na, nb))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    with nogil:
        for i in range(na):
            for j in range(nb):
                acc = 0.0
                for t in range(dim):
                    diff = a[i, t] - b[j, t]
                    acc += diff * diff
                o[i, j] = exp(-acc / (scales_a[i] * scales_b[j]))
    return out


def kth_smallest_sq_dists(double[:, ::1] a, double[:, ::1] b, Py_ssize_t k,
                          bint exclude_diagonal, bint positive_only):
    """Per row of ``a``: the k-th smallest admissible squared distance to
    rows of ``b`` plus the smallest strictly positive one (+inf if absent).
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    cdef cnp.ndarray[double, ndim=1] kth = np.empty(na)
    cdef cnp.ndarray[double, ndim=1] min_pos = np.empty(na)
    cdef double[::1] kv = kth
    cdef double[::1] mv = min_pos
    cdef double[::1] best = np.empty(k)
    cdef Py_ssize_t i, j, t, filled, pos
    cdef double acc, diff, mp
    with nogil:
        for i in range(na):
            filled = 0
            mp = INFINITY
            for j in range(nb):
                if exclude_diagonal and i == j:
                    continue
                acc = 0.0
                for t in range(dim):
                    diff = a[i, t] - b[j, t]
                    acc += diff * diff
                if acc > 0.0 and acc < mp:
                    mp = acc
                if positive_only and acc == 0.0:
                    continue
                # insertion into the running k smallest (ascending)
                if filled < k:
                    pos = filled
                    while pos > 0 and best[pos - 1] > acc:
                        best[pos] = best[pos - 1]
                        pos -= 1
                    best[pos] = acc
                    filled += 1
                elif acc < best[k - 1]:
                    pos = k - 1
                    while pos > 0 and best[pos - 1] > acc:
                        best[pos] = best[pos - 1]
                        pos -= 1
                    best[pos] = acc
            kv[i] = best[k - 1] if filled == k else INFINITY
            mv[i] = mp
    return kth, min_pos


def rowwise_norms(double[:, ::1] x, double[:, ::1] x_prime):
    """Per-row ((||x_i - x'_i||, ||x_i||) pair) for relative-error metrics."""
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1]
    cdef cnp.ndarray[double, ndim=1] diff_norm = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] row_norm = np.empty(n)
    cdef double[::1] dn = diff_norm
    cdef double[::1] rn = row_norm
    cdef Py_ssize_t i, t
    cdef double acc_d, acc_r, d
    with nogil:
        for i in range(n):
            acc_d = 0.0
            acc_r = 0.0
            for t in range(dim):
                d = x[i, t] - x_prime[i, t]
                acc_d += d * d
                acc_r += x[i, t] * x[i, t]
            dn[i] = sqrt(acc_d)
            rn[i] = sqrt(acc_r)
    return diff_norm, row_norm
