"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from tweettone.corpus import LabeledExample
from tweettone.neuralnet import ModelConfig, init_model, loss_and_grads
from tweettone.tones import TONES

from .conftest import make_tweet


def brute_force_lrap(y, f):
    """Sort each row descending and count, one label at a time."""
    scores = []
    for yi, fi in zip(y, f):
        pos = [j for j in range(len(yi)) if yi[j]]
        if len(pos) in (0, len(yi)):
            scores.append(1.0)
            continue
        ordered = sorted(fi, reverse=True)
        total = 0.0
        for j in pos:
            # rank = number of scores >= f_ij, ties counted against the label
            rank = len(ordered) - next(i for i, s in enumerate(reversed(ordered)) if s >= fi[j])
            hits = sum(1 for k in pos if fi[k] >= fi[j])
            total += hits / rank
        scores.append(total / len(pos))
    return sum(scores) / len(scores)


def scalar_adam(p, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Plain-float Adam over a sequence of scalar gradients."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
    return p


TINY = dict(vocab_size=16, d_model=8, n_heads=2, n_layers=1, d_ffn=16, max_len=4)


def tiny_batch(seed, batch=3, seq_len=4):
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, TINY["vocab_size"], size=(batch, seq_len))
    lengths = rng.integers(1, seq_len + 1, size=batch)
    mask = (np.arange(seq_len)[None, :] < lengths[:, None]).astype(np.int8)
    ids = np.where(mask == 1, ids, 0)
    y = (rng.random((batch, 7)) < 0.4).astype(np.float64)
    return ids, mask, y


def gradient_check(seed, h=1e-5, scale_floor=1e-7):
    """Worst error of analytic vs central-difference gradients, all tensors.

    Error per element is |a - n| / max(|a|, |n|, scale_floor). Central
    differences at h=1e-5 carry roundoff of about eps * |loss| / h ~ 1e-11,
    so elements whose true gradient is tiny or exactly zero (the attention
    key bias) are held to roughly 1e-11 absolute agreement instead of a
    relative one that roundoff alone would break.
    Returns ``(worst_error, worst_tensor)``.
    """
    params = init_model(ModelConfig(seed=seed, **TINY))
    # move LN gains and all biases off their init values so every path
    # carries gradient
    rng = np.random.default_rng(seed + 1000)
    for t in params.tensors.values():
        t += 0.1 * rng.standard_normal(t.shape)
    ids, mask, y = tiny_batch(seed)
    _, grads = loss_and_grads(params, ids, mask, y)
    worst, where = 0.0, None
    for name, t in params.tensors.items():
        flat = t.reshape(-1)
        numeric = np.empty(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp, _ = loss_and_grads(params, ids, mask, y)
            flat[i] = old - h
            lm, _ = loss_and_grads(params, ids, mask, y)
            flat[i] = old
            numeric[i] = (lp - lm) / (2 * h)
        a = grads[name].reshape(-1)
        err = np.abs(a - numeric) / np.maximum(np.maximum(np.abs(a), np.abs(numeric)), scale_floor)
        if err.max() > worst:
            worst, where = float(err.max()), name
    return worst, where


FILLER = ("stay", "home", "covid", "today", "people", "news")


def separable_examples(n=64, seed=7):
    """Tweets whose tones are announced by one marker word per tone."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        k = int(rng.integers(1, 4))
        tones = sorted(rng.choice(7, size=k, replace=False).tolist())
        words = [f"marker{TONES[t]}" for t in tones]
        words += [FILLER[j] for j in rng.integers(0, len(FILLER), size=int(rng.integers(1, 4)))]
        rng.shuffle(words)
        labels = tuple(1 if t in tones else 0 for t in range(7))
        out.append(LabeledExample(make_tweet(f"s{i:03d}", text=" ".join(words)), labels))
    return out
