"""Pure-numpy implementations of the hot numeric kernels.

This module is the fallback backend; ``fedzge._ckernels`` provides the same
functions compiled with Cython. Both operate on C-contiguous float64 arrays
and must stay semantically interchangeable (tiny floating-point differences
from summation order are allowed).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def dense_forward(x, w, b):
    return x @ w + b


def dense_backward(x, w, gy):
    gx = gy @ w.T
    gw = x.T @ gy
    gb = gy.sum(axis=0)
    return gx, gw, gb


def leaky_relu_forward(x, slope):
    return np.where(x > 0.0, x, slope * x)


def leaky_relu_backward(x, slope, gy):
    return np.where(x > 0.0, gy, slope * gy)


def tanh_forward(x):
    return np.tanh(x)


def tanh_backward(y, gy):
    return gy * (1.0 - y * y)


def batchnorm_train_forward(x, gamma, beta, eps):
    mean = x.mean(axis=0)
    var = x.var(axis=0)
    xhat = (x - mean) / np.sqrt(var + eps)
    return gamma * xhat + beta, mean, var, xhat


def batchnorm_eval_forward(x, gamma, beta, rmean, rvar, eps):
    return gamma * (x - rmean) / np.sqrt(rvar + eps) + beta


def batchnorm_backward(xhat, var, gamma, gy, eps):
    m = gy.shape[0]
    ggamma = (gy * xhat).sum(axis=0)
    gbeta = gy.sum(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    gx = (gamma * inv_std / m) * (m * gy - gbeta - xhat * ggamma)
    return gx, ggamma, gbeta


def embedding_forward(table, ids0):
    return table[ids0]


def embedding_backward(ids0, num_rows, gy):
    gtable = np.zeros((num_rows, gy.shape[1]))
    np.add.at(gtable, ids0, gy)
    return gtable


def adam_update(p, g, m, v, t, lr, b1, b2, eps):
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * g * g
    mhat = m / (1.0 - b1 ** t)
    vhat = v / (1.0 - b2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def softmax_rows(x):
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def pairwise_dist(x):
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))
