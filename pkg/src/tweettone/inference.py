"""Streaming tone prediction with a strict 0.5 threshold."""

import csv
from dataclasses import dataclass

import numpy as np

from .io import atomic_write, format_float
from .neuralnet import predict_proba
from .textprep import encode_batch
from .tones import TONES, format_tone_list, parse_tone_list

PREDICTION_COLUMNS = ("tweet_id",) + tuple(f"p_{t}" for t in TONES) + ("tone_list",)


class IncompatibleModelError(ValueError):
    pass


@dataclass(frozen=True)
class TonePrediction:
    tweet_id: str
    probs: tuple
    tones: tuple


def assign_tones(probs, threshold=0.5):
    """Set tone i iff ``probs[i] > threshold`` (strictly)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return tuple(int(p > threshold) for p in probs)


def check_compatible(model, vocab):
    if len(vocab) != model.config.vocab_size:
        raise IncompatibleModelError(
            f"vocabulary has {len(vocab)} tokens but the checkpoint expects {model.config.vocab_size}"
        )


def _batches(tweets, batch_size):
    batch = []
    for t in tweets:
        batch.append(t)
        if len(batch) == batch_size:
            yield batch
            batch = []
    if batch:
        yield batch


def predict(model, vocab, tweets, batch_size=64, threshold=0.5):
    """Yield a :class:`TonePrediction` per tweet, in input order.

    Works on any iterable and holds at most one batch of activations.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    check_compatible(model, vocab)
    max_len = model.config.max_len
    for batch in _batches(tweets, batch_size):
        ids, mask = encode_batch([t.text for t in batch], vocab, max_len)
        probs = predict_proba(model, ids, mask)
        for t, p in zip(batch, probs):
            p = tuple(float(x) for x in np.clip(p, 0.0, 1.0))
            yield TonePrediction(t.tweet_id, p, assign_tones(p, threshold))


def write_predictions(path, predictions):
    """Stream predictions to CSV; returns the number of rows written."""
    n = 0
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_COLUMNS)
        for pred in predictions:
            w.writerow([pred.tweet_id, *(format_float(p) for p in pred.probs), format_tone_list(pred.tones)])
            n += 1
    return n


def read_predictions(path):
    """Yield TonePredictions back from a prediction CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PREDICTION_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
        for r in reader:
            probs = tuple(float(r[f"p_{t}"]) for t in TONES)
            yield TonePrediction(r["tweet_id"], probs, parse_tone_list(r["tone_list"]))
