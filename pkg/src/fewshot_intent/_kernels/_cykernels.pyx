# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused single-pass kernels for the training hot loop.

Same contracts as the numpy backend; loops are fused to cut temporaries
and memory passes. Results can differ from the numpy backend in the
last ulps (libm exp vs numpy's vectorized exp, sequential vs pairwise
summation); each backend is individually deterministic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expf, log, sqrt, sqrtf

cnp.import_array()

NAME = "compiled"

LOSS_EPS = 1e-12

ctypedef fused real:
    float
    double


def relu(z):
    out = np.empty_like(z)
    _relu(z.reshape(-1), out.reshape(-1))
    return out


def _relu(real[::1] z, real[::1] out):
    # branchless (multiply by the comparison mask) so the loop vectorizes
    cdef Py_ssize_t i, n = z.shape[0]
    for i in range(n):
        out[i] = z[i] * <real> (z[i] > 0)


def relu_dropout(z, mask):
    out = np.empty_like(z)
    _relu_dropout(z.reshape(-1), mask.reshape(-1), out.reshape(-1))
    return out


def _relu_dropout(real[::1] z, real[::1] mask, real[::1] out):
    cdef Py_ssize_t i, n = z.shape[0]
    for i in range(n):
        out[i] = z[i] * mask[i] * <real> (z[i] > 0)


def relu_backward(d_out, z):
    out = np.empty_like(d_out)
    _relu_backward(d_out.reshape(-1), z.reshape(-1), out.reshape(-1))
    return out


def _relu_backward(real[::1] d_out, real[::1] z, real[::1] out):
    cdef Py_ssize_t i, n = d_out.shape[0]
    for i in range(n):
        out[i] = d_out[i] * <real> (z[i] > 0)


def relu_dropout_backward(d_out, z, mask):
    out = np.empty_like(d_out)
    _relu_dropout_backward(d_out.reshape(-1), z.reshape(-1), mask.reshape(-1), out.reshape(-1))
    return out


def _relu_dropout_backward(real[::1] d_out, real[::1] z, real[::1] mask, real[::1] out):
    cdef Py_ssize_t i, n = d_out.shape[0]
    for i in range(n):
        out[i] = d_out[i] * mask[i] * <real> (z[i] > 0)


def apply_mask(a, mask):
    out = np.empty_like(a)
    _apply_mask(a.reshape(-1), mask.reshape(-1), out.reshape(-1))
    return out


def _apply_mask(real[::1] a, real[::1] mask, real[::1] out):
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        out[i] = a[i] * mask[i]


def softmax(logits):
    out = np.ascontiguousarray(logits).copy()
    _softmax(out)
    return out


def _softmax(real[:, ::1] p):
    cdef Py_ssize_t i, j, rows = p.shape[0], cols = p.shape[1]
    cdef double m, s
    for i in range(rows):
        m = p[i, 0]
        for j in range(1, cols):
            if p[i, j] > m:
                m = p[i, j]
        s = 0.0
        if real is float:
            for j in range(cols):
                p[i, j] = expf(p[i, j] - <float> m)
                s += p[i, j]
        else:
            for j in range(cols):
                p[i, j] = exp(p[i, j] - m)
                s += p[i, j]
        for j in range(cols):
            p[i, j] = p[i, j] / <real> s


def nll_loss(probs, y):
    return _nll_loss(probs, np.ascontiguousarray(y, dtype=np.int64))


def _nll_loss(real[:, ::1] probs, cnp.int64_t[::1] y):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double acc = 0.0, p
    for i in range(n):
        p = probs[i, y[i]]
        if p < LOSS_EPS:
            p = LOSS_EPS
        acc += -log(p)
    return acc / n


def softmax_xent_backward(probs, y):
    out = probs.copy()
    _softmax_xent_backward(out, np.ascontiguousarray(y, dtype=np.int64))
    return out


def _softmax_xent_backward(real[:, ::1] d, cnp.int64_t[::1] y):
    cdef Py_ssize_t i, j, n = d.shape[0], cols = d.shape[1]
    cdef real inv_n = <real> (1.0 / n)
    for i in range(n):
        for j in range(cols):
            d[i, j] = d[i, j] * inv_n
        d[i, y[i]] -= inv_n


def sgd_step(w, g, lr):
    _sgd_step(w.reshape(-1), g.reshape(-1), lr)


def _sgd_step(real[::1] w, real[::1] g, double lr):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef real lr_r = <real> lr
    for i in range(n):
        w[i] = w[i] - lr_r * g[i]


def adam_step(w, g, m, v, lr, beta1, beta2, eps, step):
    _adam_step(w.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
               lr, beta1, beta2, eps, step)


def _adam_step(real[::1] w, real[::1] g, real[::1] m, real[::1] v,
               double lr, double beta1, double beta2, double eps, long step):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef real b1 = <real> beta1, b2 = <real> beta2
    cdef real one = <real> 1.0
    cdef real c1 = <real> (1.0 - beta1 ** step)
    cdef real c2 = <real> (1.0 - beta2 ** step)
    cdef real lr_r = <real> lr, eps_r = <real> eps
    cdef real m_hat, v_hat
    for i in range(n):
        m[i] = b1 * m[i] + (one - b1) * g[i]
        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i]
        m_hat = m[i] / c1
        v_hat = v[i] / c2
        if real is float:
            w[i] = w[i] - lr_r * m_hat / (sqrtf(v_hat) + eps_r)
        else:
            w[i] = w[i] - lr_r * m_hat / (sqrt(v_hat) + eps_r)
