# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the layer-norm, softmax and LRAP kernels in ``_pykernels``.

GELU has no compiled version: numpy's vectorised tanh beats a scalar
libm loop, so both backends share the numpy one.

Inputs must be C-contiguous float64 (int8 for label matrices); the
dispatching module in ``tweettone.kernels`` takes care of that.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, INFINITY

cnp.import_array()

def layernorm_forward(const double[:, ::1] x, const double[::1] gamma,
                      const double[::1] beta, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    cdef double mu, var, r, c
    y_arr = np.empty((n, d), dtype=np.float64)
    xhat_arr = np.empty((n, d), dtype=np.float64)
    rstd_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[::1] rstd = rstd_arr
    with nogil:
        for i in range(n):
            mu = 0.0
            for j in range(d):
                mu += x[i, j]
            mu /= d
            var = 0.0
            for j in range(d):
                c = x[i, j] - mu
                var += c * c
            var /= d
            r = 1.0 / sqrt(var + eps)
            rstd[i] = r
            for j in range(d):
                c = (x[i, j] - mu) * r
                xhat[i, j] = c
                y[i, j] = c * gamma[j] + beta[j]
    return y_arr, xhat_arr, rstd_arr


def layernorm_backward(const double[:, ::1] dy, const double[:, ::1] xhat,
                       const double[::1] rstd, const double[::1] gamma):
    cdef Py_ssize_t n = dy.shape[0], d = dy.shape[1], i, j
    cdef double m1, m2, g
    dx_arr = np.empty((n, d), dtype=np.float64)
    dgamma_arr = np.zeros(d, dtype=np.float64)
    dbeta_arr = np.zeros(d, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[::1] dgamma = dgamma_arr
    cdef double[::1] dbeta = dbeta_arr
    with nogil:
        for i in range(n):
            m1 = 0.0
            m2 = 0.0
            for j in range(d):
                g = dy[i, j] * gamma[j]
                m1 += g
                m2 += g * xhat[i, j]
                dgamma[j] += dy[i, j] * xhat[i, j]
                dbeta[j] += dy[i, j]
            m1 /= d
            m2 /= d
            for j in range(d):
                dx[i, j] = (dy[i, j] * gamma[j] - m1 - xhat[i, j] * m2) * rstd[i]
    return dx_arr, dgamma_arr, dbeta_arr


def masked_softmax(const double[:, :, :, ::1] scores, const signed char[:, ::1] mask):
    cdef Py_ssize_t B = scores.shape[0], H = scores.shape[1]
    cdef Py_ssize_t T = scores.shape[2], S = scores.shape[3]
    cdef Py_ssize_t b, h, i, j
    cdef double m, z, e
    out = np.zeros((B, H, T, S), dtype=np.float64)
    cdef double[:, :, :, ::1] p = out
    with nogil:
        for b in range(B):
            for h in range(H):
                for i in range(T):
                    m = -INFINITY
                    for j in range(S):
                        if mask[b, j] and scores[b, h, i, j] > m:
                            m = scores[b, h, i, j]
                    if m == -INFINITY:
                        continue
                    z = 0.0
                    for j in range(S):
                        if mask[b, j]:
                            e = exp(scores[b, h, i, j] - m)
                            p[b, h, i, j] = e
                            z += e
                    for j in range(S):
                        p[b, h, i, j] /= z
    return out


def softmax_backward(const double[:, :, :, ::1] probs, const double[:, :, :, ::1] dprobs):
    cdef Py_ssize_t B = probs.shape[0], H = probs.shape[1]
    cdef Py_ssize_t T = probs.shape[2], S = probs.shape[3]
    cdef Py_ssize_t b, h, i, j
    cdef double dot
    out = np.empty((B, H, T, S), dtype=np.float64)
    cdef double[:, :, :, ::1] ds = out
    with nogil:
        for b in range(B):
            for h in range(H):
                for i in range(T):
                    dot = 0.0
                    for j in range(S):
                        dot += probs[b, h, i, j] * dprobs[b, h, i, j]
                    for j in range(S):
                        ds[b, h, i, j] = probs[b, h, i, j] * (dprobs[b, h, i, j] - dot)
    return out


def lrap_samples(const signed char[:, ::1] y, const double[:, ::1] f):
    cdef Py_ssize_t n = y.shape[0], L = y.shape[1], i, j, k
    cdef Py_ssize_t npos, rank, hits
    cdef double acc, fj
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] score = out
    with nogil:
        for i in range(n):
            npos = 0
            for j in range(L):
                if y[i, j]:
                    npos += 1
            if npos == 0 or npos == L:
                score[i] = 1.0
                continue
            acc = 0.0
            for j in range(L):
                if not y[i, j]:
                    continue
                fj = f[i, j]
                rank = 0
                hits = 0
                for k in range(L):
                    if f[i, k] >= fj:
                        rank += 1
                        if y[i, k]:
                            hits += 1
                acc += <double>hits / <double>rank
            score[i] = acc / npos
    return out
