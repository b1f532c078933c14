# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_kernels_py`` for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def volterra_forward(z, double a0, m):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] w
    cdef Py_ssize_t k, j
    cdef double acc, diag
    out[0] = zv[0] / (1.0 - a0)
    if n == 1:
        return out_arr
    w_arr = np.zeros(n)
    w = w_arr
    for j in range(1, n - 1):
        w[j] = 0.5 * (mv[j - 1] + mv[j])
    diag = 1.0 - a0 - 0.5 * mv[0]
    for k in range(1, n):
        acc = zv[k] + 0.5 * mv[k - 1] * out[0]
        for j in range(1, k):
            acc += w[j] * out[k - j]
        out[k] = acc / diag
    return out_arr


def gauss_seidel_sweep(double[::1] Z, const double[::1] z, const double[::1] w, Py_ssize_t offset):
    cdef Py_ssize_t n = Z.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    cdef Py_ssize_t k, j, idx
    cdef double acc, new, d, change = 0.0
    cdef double diag = 1.0 - w[offset]
    for k in range(n):
        acc = z[k]
        for j in range(nw):
            if j == offset:
                continue
            idx = k - j + offset
            if idx < 0:
                break
            if idx >= n:
                idx = n - 1
            acc += w[j] * Z[idx]
        new = acc / diag
        d = fabs(new - Z[k])
        if d > change:
            change = d
        Z[k] = new
    return change


def scan_exceed_batch(const double[:, ::1] xs, const double[:, ::1] ys,
                      double[::1] sx, double[::1] sy, double level,
                      long[::1] first, signed char[::1] stop, double[::1] y_at):
    cdef Py_ssize_t npath = xs.shape[0]
    cdef Py_ssize_t kk = xs.shape[1]
    cdef Py_ssize_t i, c
    cdef double s, w, nxt
    for i in range(npath):
        s = sx[i]
        w = sy[i]
        first[i] = -1
        stop[i] = 0
        y_at[i] = 0.0
        for c in range(kk):
            nxt = s + xs[i, c]
            if nxt > level:
                first[i] = c
                stop[i] = 1
                y_at[i] = ys[i, c]
                break
            s = nxt
            w = w + ys[i, c]
        sx[i] = s
        sy[i] = w
