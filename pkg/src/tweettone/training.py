"""Train/test split, Adam, and the sub-batch + gradient-accumulation loop."""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .io import atomic_write, format_float
from .neuralnet import bce_with_logits, forward, loss_and_grads, sigmoid
from .textprep import encode_batch


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    sub_batch: int = 2
    grad_accum_steps: int = 16
    epochs: int = 3
    split_ratio: float = 0.8
    seed: int = 0
    eval_every: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self):
        if not 0.0 < self.split_ratio < 1.0:
            raise TrainingError("split_ratio must be in (0, 1)")
        if self.sub_batch < 1 or self.grad_accum_steps < 1:
            raise TrainingError("sub_batch and grad_accum_steps must be >= 1")
        if not self.learning_rate > 0.0:
            raise TrainingError("learning_rate must be > 0")
        if self.epochs < 0:
            raise TrainingError("epochs must be >= 0")
        if self.eval_every < 1:
            raise TrainingError("eval_every must be >= 1")
        return self


def split(examples, ratio=0.8, seed=0):
    """Seeded shuffle, then the first floor(ratio * n) items go to train."""
    items = list(examples)
    if not items:
        raise TrainingError("cannot split an empty collection")
    if not 0.0 < ratio < 1.0:
        raise TrainingError("ratio must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(items))
    n_train = math.floor(ratio * len(items))
    if n_train == 0 or n_train == len(items):
        raise TrainingError(f"split of {len(items)} items at ratio {ratio} leaves an empty partition")
    return [items[i] for i in order[:n_train]], [items[i] for i in order[n_train:]]


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, tensors, beta1=0.9, beta2=0.999, eps=1e-8):
        tensors = getattr(tensors, "tensors", tensors)
        return cls(
            m={k: np.zeros_like(v) for k, v in tensors.items()},
            v={k: np.zeros_like(v) for k, v in tensors.items()},
            beta1=beta1, beta2=beta2, eps=eps,
        )


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update, applied in place.

    ``params`` is a ModelParams or a plain ``{name: ndarray}``. All gradients
    are checked for finiteness before anything is modified.
    """
    tensors = getattr(params, "tensors", params)
    for name, g in grads.items():
        if name not in tensors or np.shape(g) != tensors[name].shape:
            raise TrainingError(f"gradient {name!r} does not match a parameter tensor")
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient in tensor {name!r}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        tensors[name] -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


@dataclass
class HistoryRow:
    step: int
    train_loss: float
    eval_loss: Optional[float] = None
    lrap: Optional[float] = None


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def evaluations(self):
        return [r for r in self.rows if r.lrap is not None]

    def write_csv(self, path):
        with atomic_write(path, newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "train_loss", "eval_loss", "lrap"])
            for r in self.rows:
                w.writerow([
                    r.step,
                    format_float(r.train_loss),
                    "" if r.eval_loss is None else format_float(r.eval_loss),
                    "" if r.lrap is None else format_float(r.lrap),
                ])


def encode_examples(examples, vocab, max_len):
    ids, mask = encode_batch([ex.tweet.text for ex in examples], vocab, max_len)
    y = np.array([ex.labels for ex in examples], dtype=np.float64).reshape(len(examples), -1)
    return ids, mask, y


def evaluate(params, ids, mask, y, batch_size=256):
    """Return ``(eval_loss, lrap)`` of the model on an encoded set."""
    logits = np.concatenate([
        forward(params, ids[i:i + batch_size], mask[i:i + batch_size])
        for i in range(0, len(ids), batch_size)
    ]) if len(ids) else np.zeros((0, params.config.n_labels))
    loss = float(bce_with_logits(logits, y).mean())
    return loss, metrics.lrap(y.astype(np.int8), sigmoid(logits))


def accumulate_window(params, chunks):
    """Average loss and gradient over a window of sub-batches.

    Each chunk is ``(ids, mask, y)``. Per-example losses are summed and
    divided by the window's example count, so the result equals the
    gradient of the concatenated batch even when chunks differ in size.
    """
    total = None
    loss_sum = 0.0
    count = 0
    for ids, mask, y in chunks:
        loss, grads = loss_and_grads(params, ids, mask, y, reduction="sum")
        loss_sum += loss
        count += len(ids)
        if total is None:
            total = grads
        else:
            for k in total:
                total[k] += grads[k]
    for k in total:
        total[k] /= count
    return loss_sum / count, total


def train(model, data, tcfg, vocab, log=None):
    """Train ``model`` on ``data = (train_set, test_set)``.

    Returns ``(trained ModelParams, TrainHistory)``; the input params are not
    modified. One optimizer step consumes ``grad_accum_steps`` sub-batches
    of ``sub_batch`` examples; a shorter trailing window at the end of an
    epoch still produces a step. The test set is evaluated every
    ``eval_every`` steps and at the end of each epoch.
    """
    tcfg.validate()
    train_set, test_set = data
    if not train_set:
        raise TrainingError("training set is empty")
    if len(vocab) != model.config.vocab_size:
        raise TrainingError(f"vocabulary has {len(vocab)} tokens but the model expects {model.config.vocab_size}")
    params = model.copy()
    history = TrainHistory()
    if tcfg.epochs == 0:
        return params, history

    max_len = model.config.max_len
    ids, mask, y = encode_examples(train_set, vocab, max_len)
    test = encode_examples(test_set, vocab, max_len) if test_set else None
    state = AdamState.zeros(params, tcfg.beta1, tcfg.beta2, tcfg.eps)
    rng = np.random.default_rng(tcfg.seed)
    window = tcfg.sub_batch * tcfg.grad_accum_steps
    n = len(ids)

    for epoch in range(tcfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, window):
            idx = order[start:start + window]
            chunks = [
                (ids[idx[j:j + tcfg.sub_batch]], mask[idx[j:j + tcfg.sub_batch]], y[idx[j:j + tcfg.sub_batch]])
                for j in range(0, len(idx), tcfg.sub_batch)
            ]
            loss, grads = accumulate_window(params, chunks)
            adam_step(params, grads, state, tcfg.learning_rate)
            row = HistoryRow(step=state.t, train_loss=loss)
            epoch_end = start + window >= n
            if test is not None and (state.t % tcfg.eval_every == 0 or epoch_end):
                row.eval_loss, row.lrap = evaluate(params, *test)
            history.rows.append(row)
            if log is not None and row.lrap is not None:
                log(f"epoch {epoch + 1} step {row.step}: train_loss={loss:.4f} "
                    f"eval_loss={row.eval_loss:.4f} lrap={row.lrap:.4f}")
    return params, history
