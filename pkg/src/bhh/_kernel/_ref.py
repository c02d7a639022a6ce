"""NumPy reference implementation of the network kernels.

Mirrors the compiled extension in ``_fastcore.pyx``; both expose the same
three entry points with identical semantics:

    forward(params, n_in, n_h, n_out, slope, use_biases, out_act, x)
    loss_value(params, ..., loss_kind, x, t_cls, t_reg)
    loss_and_grad(params, ..., loss_kind, x, t_cls, t_reg)

Parameter layout is a single flat float64 vector: layer-1 weights
(row-major, shape n_in x n_h), layer-1 biases, layer-2 weights (row-major,
shape n_h x n_out), layer-2 biases. Bias segments are absent when
``use_biases`` is false.

Activation codes: 0 = sigmoid, 1 = softmax (row-wise, max-subtracted).
Loss codes: 0 = binary cross-entropy, 1 = sparse categorical cross-entropy,
2 = mean squared error. Cross-entropy probabilities are clamped to
[PROB_EPS, 1 - PROB_EPS] before the log; the gradient is the exact
derivative of the clamped loss (zero where the clamp saturates).
"""

from __future__ import annotations

import numpy as np

# Clamp epsilon for cross-entropy probabilities. Must match _fastcore.pyx.
PROB_EPS = 1e-7

OUT_SIGMOID = 0
OUT_SOFTMAX = 1

LOSS_BINXE = 0
LOSS_SPARSE_CAT_XE = 1
LOSS_MSE = 2


def _unpack(params, n_in, n_h, n_out, use_biases):
    w1_size = n_in * n_h
    w2_size = n_h * n_out
    pos = 0
    w1 = params[pos : pos + w1_size].reshape(n_in, n_h)
    pos += w1_size
    if use_biases:
        b1 = params[pos : pos + n_h]
        pos += n_h
    else:
        b1 = 0.0
    w2 = params[pos : pos + w2_size].reshape(n_h, n_out)
    pos += w2_size
    b2 = params[pos : pos + n_out] if use_biases else 0.0
    return w1, b1, w2, b2


def _forward_parts(params, n_in, n_h, n_out, slope, use_biases, out_act, x):
    w1, b1, w2, b2 = _unpack(params, n_in, n_h, n_out, use_biases)
    z1 = x @ w1 + b1
    h = np.where(z1 > 0.0, z1, slope * z1)
    z2 = h @ w2 + b2
    if out_act == OUT_SIGMOID:
        p = 1.0 / (1.0 + np.exp(-z2))
    else:
        shifted = z2 - z2.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        p = e / e.sum(axis=1, keepdims=True)
    return z1, h, p


def forward(params, n_in, n_h, n_out, slope, use_biases, out_act, x):
    _, _, p = _forward_parts(params, n_in, n_h, n_out, slope, use_biases, out_act, x)
    return p


def _loss_from_probs(loss_kind, p, t_cls, t_reg):
    n = p.shape[0]
    if loss_kind == LOSS_BINXE:
        q = np.clip(p[:, 0], PROB_EPS, 1.0 - PROB_EPS)
        y = t_cls.astype(np.float64)
        return float(-np.mean(y * np.log(q) + (1.0 - y) * np.log(1.0 - q)))
    if loss_kind == LOSS_SPARSE_CAT_XE:
        q = np.clip(p[np.arange(n), t_cls], PROB_EPS, 1.0 - PROB_EPS)
        return float(-np.mean(np.log(q)))
    return float(np.mean((p - t_reg) ** 2))


def loss_value(params, n_in, n_h, n_out, slope, use_biases, out_act, loss_kind, x, t_cls, t_reg):
    p = forward(params, n_in, n_h, n_out, slope, use_biases, out_act, x)
    return _loss_from_probs(loss_kind, p, t_cls, t_reg)


def loss_and_grad(params, n_in, n_h, n_out, slope, use_biases, out_act, loss_kind, x, t_cls, t_reg):
    z1, h, p = _forward_parts(params, n_in, n_h, n_out, slope, use_biases, out_act, x)
    n = x.shape[0]
    loss = _loss_from_probs(loss_kind, p, t_cls, t_reg)

    if loss_kind == LOSS_BINXE:
        y = t_cls.astype(np.float64)
        inside = (p[:, 0] > PROB_EPS) & (p[:, 0] < 1.0 - PROB_EPS)
        dz2 = ((p[:, 0] - y) * inside / n)[:, None]
    elif loss_kind == LOSS_SPARSE_CAT_XE:
        q = p[np.arange(n), t_cls]
        inside = (q > PROB_EPS) & (q < 1.0 - PROB_EPS)
        onehot = np.zeros_like(p)
        onehot[np.arange(n), t_cls] = 1.0
        dz2 = (p - onehot) * inside[:, None] / n
    else:
        # MSE mean over every output element, through the sigmoid.
        dz2 = 2.0 * (p - t_reg) / (n * p.shape[1]) * p * (1.0 - p)

    w1, _, w2, _ = _unpack(params, n_in, n_h, n_out, use_biases)
    g_w2 = h.T @ dz2
    g_b2 = dz2.sum(axis=0)
    dh = dz2 @ w2.T
    dz1 = dh * np.where(z1 > 0.0, 1.0, slope)
    g_w1 = x.T @ dz1
    g_b1 = dz1.sum(axis=0)

    if use_biases:
        grad = np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])
    else:
        grad = np.concatenate([g_w1.ravel(), g_w2.ravel()])
    return loss, grad
