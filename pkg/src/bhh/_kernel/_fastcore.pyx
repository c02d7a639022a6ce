# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled network kernels: fused forward pass, loss, and backprop.

Semantics must match the NumPy reference in ``_ref.py`` (same parameter
layout, activation/loss codes, and clamp epsilon); see that module for the
contract. The loops here avoid per-call array temporaries, which dominates
runtime for the small networks this package trains.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

# Must match _ref.PROB_EPS.
cdef double PROB_EPS = 1e-7

cdef int OUT_SIGMOID = 0
cdef int OUT_SOFTMAX = 1

cdef int LOSS_BINXE = 0
cdef int LOSS_SPARSE_CAT_XE = 1
cdef int LOSS_MSE = 2


cdef void _hidden_forward(double[::1] params, int n_in, int n_h, double slope,
                          bint use_biases, double[:, ::1] x,
                          double[:, ::1] h, double[:, ::1] d1) nogil:
    # h holds the activated hidden layer, d1 the activation derivative.
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t b, i, j
    cdef Py_ssize_t b1_off = n_in * n_h
    cdef double z
    for b in range(n):
        for j in range(n_h):
            z = params[b1_off + j] if use_biases else 0.0
            for i in range(n_in):
                z += x[b, i] * params[i * n_h + j]
            if z > 0.0:
                h[b, j] = z
                d1[b, j] = 1.0
            else:
                h[b, j] = slope * z
                d1[b, j] = slope


cdef void _output_forward(double[::1] params, int n_in, int n_h, int n_out,
                          bint use_biases, int out_act,
                          double[:, ::1] h, double[:, ::1] p) nogil:
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t b, j, o
    cdef Py_ssize_t w2_off = n_in * n_h + (n_h if use_biases else 0)
    cdef Py_ssize_t b2_off = w2_off + n_h * n_out
    cdef double z, m, s
    for b in range(n):
        for o in range(n_out):
            z = params[b2_off + o] if use_biases else 0.0
            for j in range(n_h):
                z += h[b, j] * params[w2_off + j * n_out + o]
            p[b, o] = z
        if out_act == OUT_SIGMOID:
            for o in range(n_out):
                p[b, o] = 1.0 / (1.0 + exp(-p[b, o]))
        else:
            m = p[b, 0]
            for o in range(1, n_out):
                if p[b, o] > m:
                    m = p[b, o]
            s = 0.0
            for o in range(n_out):
                p[b, o] = exp(p[b, o] - m)
                s += p[b, o]
            for o in range(n_out):
                p[b, o] /= s


cdef double _loss_and_dz2(int loss_kind, double[:, ::1] p,
                          cnp.int64_t[::1] t_cls, double[:, ::1] t_reg,
                          double[:, ::1] dz2, bint want_grad) nogil:
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t n_out = p.shape[1]
    cdef Py_ssize_t b, o
    cdef double loss = 0.0
    cdef double q, y, d
    if loss_kind == LOSS_BINXE:
        for b in range(n):
            q = p[b, 0]
            if q < PROB_EPS:
                q = PROB_EPS
            elif q > 1.0 - PROB_EPS:
                q = 1.0 - PROB_EPS
            y = <double> t_cls[b]
            loss -= y * log(q) + (1.0 - y) * log(1.0 - q)
            if want_grad:
                if PROB_EPS < p[b, 0] < 1.0 - PROB_EPS:
                    dz2[b, 0] = (p[b, 0] - y) / n
                else:
                    dz2[b, 0] = 0.0
        loss /= n
    elif loss_kind == LOSS_SPARSE_CAT_XE:
        for b in range(n):
            q = p[b, t_cls[b]]
            if q < PROB_EPS:
                q = PROB_EPS
            elif q > 1.0 - PROB_EPS:
                q = 1.0 - PROB_EPS
            loss -= log(q)
            if want_grad:
                if PROB_EPS < p[b, t_cls[b]] < 1.0 - PROB_EPS:
                    for o in range(n_out):
                        dz2[b, o] = p[b, o] / n
                    dz2[b, t_cls[b]] -= 1.0 / n
                else:
                    for o in range(n_out):
                        dz2[b, o] = 0.0
        loss /= n
    else:
        for b in range(n):
            for o in range(n_out):
                d = p[b, o] - t_reg[b, o]
                loss += d * d
                if want_grad:
                    dz2[b, o] = 2.0 * d / (n * n_out) * p[b, o] * (1.0 - p[b, o])
        loss /= n * n_out
    return loss


def forward(double[::1] params, int n_in, int n_h, int n_out, double slope,
            bint use_biases, int out_act, double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    h_arr = np.empty((n, n_h), dtype=np.float64)
    d1_arr = np.empty((n, n_h), dtype=np.float64)
    p_arr = np.empty((n, n_out), dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] d1 = d1_arr
    cdef double[:, ::1] p = p_arr
    with nogil:
        _hidden_forward(params, n_in, n_h, slope, use_biases, x, h, d1)
        _output_forward(params, n_in, n_h, n_out, use_biases, out_act, h, p)
    return p_arr


def loss_value(double[::1] params, int n_in, int n_h, int n_out, double slope,
               bint use_biases, int out_act, int loss_kind, double[:, ::1] x,
               cnp.int64_t[::1] t_cls, double[:, ::1] t_reg):
    cdef Py_ssize_t n = x.shape[0]
    h_arr = np.empty((n, n_h), dtype=np.float64)
    d1_arr = np.empty((n, n_h), dtype=np.float64)
    p_arr = np.empty((n, n_out), dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] d1 = d1_arr
    cdef double[:, ::1] p = p_arr
    cdef double loss
    with nogil:
        _hidden_forward(params, n_in, n_h, slope, use_biases, x, h, d1)
        _output_forward(params, n_in, n_h, n_out, use_biases, out_act, h, p)
        loss = _loss_and_dz2(loss_kind, p, t_cls, t_reg, p, False)
    return loss


def loss_and_grad(double[::1] params, int n_in, int n_h, int n_out, double slope,
                  bint use_biases, int out_act, int loss_kind, double[:, ::1] x,
                  cnp.int64_t[::1] t_cls, double[:, ::1] t_reg):
    cdef Py_ssize_t n = x.shape[0]
    h_arr = np.empty((n, n_h), dtype=np.float64)
    d1_arr = np.empty((n, n_h), dtype=np.float64)
    p_arr = np.empty((n, n_out), dtype=np.float64)
    dz2_arr = np.empty((n, n_out), dtype=np.float64)
    grad_arr = np.zeros(params.shape[0], dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] d1 = d1_arr
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] dz2 = dz2_arr
    cdef double[::1] grad = grad_arr
    cdef double loss
    cdef Py_ssize_t b, i, j, o
    cdef Py_ssize_t b1_off = n_in * n_h
    cdef Py_ssize_t w2_off = b1_off + (n_h if use_biases else 0)
    cdef Py_ssize_t b2_off = w2_off + n_h * n_out
    cdef double dh, dz1, d2

    with nogil:
        _hidden_forward(params, n_in, n_h, slope, use_biases, x, h, d1)
        _output_forward(params, n_in, n_h, n_out, use_biases, out_act, h, p)
        loss = _loss_and_dz2(loss_kind, p, t_cls, t_reg, dz2, True)

        for b in range(n):
            for o in range(n_out):
                d2 = dz2[b, o]
                if use_biases:
                    grad[b2_off + o] += d2
                for j in range(n_h):
                    grad[w2_off + j * n_out + o] += h[b, j] * d2
            for j in range(n_h):
                dh = 0.0
                for o in range(n_out):
                    dh += dz2[b, o] * params[w2_off + j * n_out + o]
                dz1 = dh * d1[b, j]
                if use_biases:
                    grad[b1_off + j] += dz1
                for i in range(n_in):
                    grad[i * n_h + j] += x[b, i] * dz1
    return loss, grad_arr
