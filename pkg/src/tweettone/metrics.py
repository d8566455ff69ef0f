"""Label ranking average precision and evaluation loss."""

import numpy as np

from . import kernels

PROB_CLAMP = 1e-12


def _as_batch(y, f):
    y = np.asarray(y)
    f = np.asarray(f, dtype=np.float64)
    if y.ndim != 2 or y.shape != f.shape:
        raise ValueError(f"label and score matrices must have the same 2-D shape, got {y.shape} and {f.shape}")
    if y.shape[0] < 1:
        raise ValueError("need at least one sample")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if not np.isfinite(f).all():
        raise ValueError("scores must be finite")
    return y, f


def lrap_per_sample(y, f):
    y, f = _as_batch(y, f)
    return kernels.lrap_samples(y, f)


def lrap(y, f):
    """Label ranking average precision of scores ``f`` against 0/1 labels ``y``.

    For each true label j of sample i the precision at its rank is
    ``|{k true: f_ik >= f_ij}| / |{k: f_ik >= f_ij}|``; a sample scores the
    mean over its true labels. Samples with no true label, or with every
    label true, score 1.
    """
    return float(lrap_per_sample(y, f).mean())


def eval_loss(y, probs):
    """Mean binary cross-entropy of probabilities against 0/1 labels.

    Probabilities are clamped to ``[1e-12, 1 - 1e-12]``; values outside
    ``[0, 1]`` are rejected.
    """
    y, p = _as_batch(y, probs)
    if (p < 0.0).any() or (p > 1.0).any():
        raise ValueError("probabilities must lie in [0, 1]")
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-(y * np.log(p) + (1 - y) * np.log1p(-p)).mean())
