# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused LSTM gate math and the Adam update.

Semantics mirror ``numpy_kernels`` exactly; gate blocks are ordered
[input | forget | output | candidate].  Inputs must be C-contiguous
float64 arrays.
"""

import numpy as np

from libc.math cimport pow, sqrt, tanh

NAME = "cython"


def lstm_cell_forward(pre, s_prev):
    """One gated cell update for a batch; see numpy_kernels for shapes.

    The transcendental work rides numpy's vectorized tanh (scalar libm
    calls lose to it badly); only the gate arithmetic is fused here.
    """
    cdef Py_ssize_t B = pre.shape[0]
    cdef Py_ssize_t H = s_prev.shape[1]
    g_arr = np.empty_like(pre)
    np.multiply(pre[:, : 3 * H], 0.5, out=g_arr[:, : 3 * H])
    np.copyto(g_arr[:, 3 * H :], pre[:, 3 * H :])
    np.tanh(g_arr, out=g_arr)
    h_arr = np.empty((B, H), dtype=np.float64)
    s_arr = np.empty((B, H), dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] gates = g_arr
    cdef double[:, ::1] sp = s_prev
    cdef Py_ssize_t b, j
    cdef double gi, gf, go, gg, sj
    with nogil:
        for b in range(B):
            for j in range(H):
                gi = 0.5 * (1.0 + gates[b, j])
                gf = 0.5 * (1.0 + gates[b, H + j])
                go = 0.5 * (1.0 + gates[b, 2 * H + j])
                gg = gates[b, 3 * H + j]
                gates[b, j] = gi
                gates[b, H + j] = gf
                gates[b, 2 * H + j] = go
                sj = gf * sp[b, j] + gi * gg
                s[b, j] = sj
                h[b, j] = go * tanh(sj)
    return h_arr, s_arr, g_arr


def lstm_cell_backward(double[:, ::1] dh, double[:, ::1] ds,
                       double[:, ::1] gates, double[:, ::1] s_prev,
                       double[:, ::1] s):
    """Backward of one cell update; see numpy_kernels for shapes."""
    cdef Py_ssize_t B = dh.shape[0]
    cdef Py_ssize_t H = dh.shape[1]
    dpre_arr = np.empty((B, 4 * H), dtype=np.float64)
    dsp_arr = np.empty((B, H), dtype=np.float64)
    cdef double[:, ::1] dpre = dpre_arr
    cdef double[:, ::1] ds_prev = dsp_arr
    cdef Py_ssize_t b, j
    cdef double gi, gf, go, gg, ts, dst, do
    with nogil:
        for b in range(B):
            for j in range(H):
                gi = gates[b, j]
                gf = gates[b, H + j]
                go = gates[b, 2 * H + j]
                gg = gates[b, 3 * H + j]
                ts = tanh(s[b, j])
                do = dh[b, j] * ts
                dst = ds[b, j] + dh[b, j] * go * (1.0 - ts * ts)
                dpre[b, j] = dst * gg * gi * (1.0 - gi)
                dpre[b, H + j] = dst * s_prev[b, j] * gf * (1.0 - gf)
                dpre[b, 2 * H + j] = do * go * (1.0 - go)
                dpre[b, 3 * H + j] = dst * gi * (1.0 - gg * gg)
                ds_prev[b, j] = dst * gf
    return dpre_arr, dsp_arr


def adam_update(double[::1] param, double[::1] grad, double[::1] m,
                double[::1] v, long step, double alpha, double beta1,
                double beta2, double eps):
    """Bias-corrected Adam update, in place, on flat arrays."""
    cdef Py_ssize_t n = param.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, step)
    cdef double bc2 = 1.0 - pow(beta2, step)
    cdef Py_ssize_t k
    cdef double g
    with nogil:
        for k in range(n):
            g = grad[k]
            m[k] = beta1 * m[k] + (1.0 - beta1) * g
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g
            param[k] -= alpha * (m[k] / bc1) / (sqrt(v[k] / bc2) + eps)
