"""Hot numerical kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise
the pure-numpy ``_pykernels`` module is. Set ``TWEETTONE_KERNELS=python``
to force the fallback. ``BACKEND`` names the active implementation.

The wrappers below normalise dtype and memory layout so both backends see
identical inputs. GELU always runs in numpy, whose vectorised tanh is
faster than a compiled scalar loop.
"""

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and os.environ.get("TWEETTONE_KERNELS", "").lower() not in ("python", "py", "numpy"):
    _impl = _ckernels
    BACKEND = "cython"
else:
    _impl = _pykernels
    BACKEND = "python"

__all__ = [
    "BACKEND",
    "available_backends",
    "get_backend",
    "gelu_forward",
    "gelu_backward",
    "layernorm_forward",
    "layernorm_backward",
    "masked_softmax",
    "softmax_backward",
    "lrap_samples",
]


def available_backends():
    return ["cython", "python"] if _ckernels is not None else ["python"]


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available in this build")
        return _ckernels
    raise ValueError(f"unknown kernel backend: {name!r}")


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def gelu_forward(x):
    x = _f64(x)
    return _pykernels.gelu_forward(x)


def gelu_backward(x, dy):
    x = _f64(x)
    return _pykernels.gelu_backward(x, _f64(dy))


def layernorm_forward(x, gamma, beta, eps=1e-5):
    """Layer norm over the last axis. Returns ``(y, xhat, rstd)``."""
    x = _f64(x)
    shape = x.shape
    y, xhat, rstd = _impl.layernorm_forward(x.reshape(-1, shape[-1]), _f64(gamma), _f64(beta), float(eps))
    return y.reshape(shape), xhat.reshape(shape), rstd.reshape(shape[:-1])


def layernorm_backward(dy, xhat, rstd, gamma):
    """Returns ``(dx, dgamma, dbeta)``."""
    dy = _f64(dy)
    shape = dy.shape
    d = shape[-1]
    dx, dgamma, dbeta = _impl.layernorm_backward(
        dy.reshape(-1, d), _f64(xhat).reshape(-1, d), _f64(rstd).reshape(-1), _f64(gamma)
    )
    return dx.reshape(shape), dgamma, dbeta


def masked_softmax(scores, mask):
    return _impl.masked_softmax(_f64(scores), np.ascontiguousarray(mask, dtype=np.int8))


def softmax_backward(probs, dprobs):
    return _impl.softmax_backward(_f64(probs), _f64(dprobs))


def lrap_samples(y, f):
    return _impl.lrap_samples(np.ascontiguousarray(y, dtype=np.int8), _f64(f))
