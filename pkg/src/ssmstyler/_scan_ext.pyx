# cython: language_level=3
"""Compiled scan kernels; must match _scan_numpy bit-for-bit in op order."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_forward(double[:, ::1] x, double[::1] alpha, double[::1] beta):
    cdef Py_ssize_t t_len = x.shape[0]
    cdef Py_ssize_t lanes = x.shape[1]
    out = np.empty((t_len, lanes), dtype=np.float64)
    cdef double[:, ::1] h = out
    cdef Py_ssize_t t, l
    cdef double prev
    for l in range(lanes):
        prev = 0.0
        for t in range(t_len):
            prev = alpha[l] * prev + beta[l] * x[t, l]
            h[t, l] = prev
    return out


def scan_backward(double[:, ::1] x, double[::1] alpha, double[::1] beta,
                  double[:, ::1] h, double[:, ::1] g):
    cdef Py_ssize_t t_len = x.shape[0]
    cdef Py_ssize_t lanes = x.shape[1]
    gx_arr = np.empty((t_len, lanes), dtype=np.float64)
    galpha_arr = np.zeros(lanes, dtype=np.float64)
    gbeta_arr = np.zeros(lanes, dtype=np.float64)
    cdef double[:, ::1] gx = gx_arr
    cdef double[::1] galpha = galpha_arr
    cdef double[::1] gbeta = gbeta_arr
    cdef Py_ssize_t t, l
    cdef double a
    for l in range(lanes):
        a = 0.0
        for t in range(t_len - 1, -1, -1):
            a = g[t, l] + alpha[l] * a
            gx[t, l] = beta[l] * a
            if t > 0:
                galpha[l] += a * h[t - 1, l]
            gbeta[l] += a * x[t, l]
    return gx_arr, galpha_arr, gbeta_arr
