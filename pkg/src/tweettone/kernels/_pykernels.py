"""Pure-numpy reference kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same
signature and semantics. Arrays are float64 and C-contiguous; callers go
through :mod:`tweettone.kernels`, which normalises inputs.
"""

import numpy as np

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715


def gelu_forward(x):
    inner = _GELU_C * (x + _GELU_A * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(inner))


def gelu_backward(x, dy):
    inner = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(inner)
    dinner = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner)


def layernorm_forward(x, gamma, beta, eps):
    """Row-wise layer norm over the last axis of a 2-D array.

    Returns ``(y, xhat, rstd)``; ``xhat`` and ``rstd`` are kept for the
    backward pass.
    """
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * gamma + beta, xhat, rstd[:, 0]


def layernorm_backward(dy, xhat, rstd, gamma):
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * gamma
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = (dxhat - m1 - xhat * m2) * rstd[:, None]
    return dx, dgamma, dbeta


def masked_softmax(scores, mask):
    """Softmax over the key axis of ``scores[b, h, i, j]``.

    Keys with ``mask[b, j] == 0`` get exactly zero weight. A row with no
    valid key is all zeros.
    """
    keep = mask.astype(bool)[:, None, None, :]
    s = np.where(keep, scores, -np.inf)
    m = s.max(axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(s - m)
    z = e.sum(axis=-1, keepdims=True)
    return e / np.where(z > 0.0, z, 1.0)


def softmax_backward(probs, dprobs):
    dot = (probs * dprobs).sum(axis=-1, keepdims=True)
    return probs * (dprobs - dot)


def lrap_samples(y, f):
    """Per-sample label ranking average precision.

    ``y`` is an (n, L) 0/1 int8 matrix, ``f`` an (n, L) score matrix.
    Samples with no positive label or only positive labels score 1.
    """
    pos = y.astype(bool)
    npos = pos.sum(axis=1)
    # ge[i, j, k]: label k scored at least as high as label j
    ge = f[:, None, :] >= f[:, :, None]
    rank = ge.sum(axis=2)
    hits = (ge & pos[:, None, :]).sum(axis=2)
    ratio = np.where(pos, hits / rank, 0.0).sum(axis=1)
    degenerate = (npos == 0) | (npos == y.shape[1])
    return np.where(degenerate, 1.0, ratio / np.maximum(npos, 1))
