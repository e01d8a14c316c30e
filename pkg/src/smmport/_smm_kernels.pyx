# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Hot loops behind :mod:`smmport.kernels`: per-sample squared conditional
signal-to-noise values for the Monte Carlo driver, and Gaussian kernel
weight sums for Nadaraya-Watson regression. Semantics match the NumPy
fallback in ``smmport._kernels_py``.
"""

from libc.math cimport exp

import numpy as np


def lcem_s_values(const double[:, ::1] feats, const double[:, ::1] b_mat,
                  const double[:, ::1] chol_lower):
    """s_i = (B f_i)' inv(L L') (B f_i) for each feature row f_i."""
    cdef Py_ssize_t m = feats.shape[0]
    cdef Py_ssize_t k = feats.shape[1]
    cdef Py_ssize_t n = b_mat.shape[0]
    out = np.empty(m, dtype=np.float64)
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] s = out
    cdef double[::1] g = work
    cdef Py_ssize_t i, a, j
    cdef double acc
    with nogil:
        for i in range(m):
            for a in range(n):
                acc = 0.0
                for j in range(k):
                    acc += b_mat[a, j] * feats[i, j]
                g[a] = acc
            # forward substitution: solve L y = g, overwriting g with y
            for a in range(n):
                acc = g[a]
                for j in range(a):
                    acc -= chol_lower[a, j] * g[j]
                g[a] = acc / chol_lower[a, a]
            acc = 0.0
            for a in range(n):
                acc += g[a] * g[a]
            s[i] = acc
    return out


def nw_sums(const double[::1] xs, const double[:, ::1] ys, const double[::1] grid,
            double bandwidth):
    """Kernel mass and mass-weighted response sums per grid point."""
    cdef Py_ssize_t t_count = xs.shape[0]
    cdef Py_ssize_t r_count = ys.shape[0]
    cdef Py_ssize_t g_count = grid.shape[0]
    den_arr = np.zeros(g_count, dtype=np.float64)
    num_arr = np.zeros((r_count, g_count), dtype=np.float64)
    cdef double[::1] den = den_arr
    cdef double[:, ::1] num = num_arr
    cdef Py_ssize_t j, t, r
    cdef double u, w, dsum
    with nogil:
        for j in range(g_count):
            dsum = 0.0
            for t in range(t_count):
                u = (grid[j] - xs[t]) / bandwidth
                w = exp(-0.5 * u * u)
                dsum += w
                for r in range(r_count):
                    num[r, j] += w * ys[r, t]
            den[j] = dsum
    return den_arr, num_arr
