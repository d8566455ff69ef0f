"""Word-level tokenizer, vocabulary and fixed-length encoding.

Tokenization rules, applied after NFC normalisation and lowercasing:

* words are maximal runs of letters, digits and underscores;
* a ``#`` or ``@`` immediately before a word stays attached (``#covid``);
* any other non-space character forms a one-character token, and those
  that are Unicode punctuation are dropped, so emoji and other symbols
  survive while ``!`` or ``,`` do not.

URLs, mentions and numbers get no special handling.
"""

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .io import atomic_write

PAD, UNK, CLS = 0, 1, 2
PAD_TOKEN, UNK_TOKEN, CLS_TOKEN = "[PAD]", "[UNK]", "[CLS]"
RESERVED = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN)
MAX_SEQ_LEN = 250

_TOKEN_RE = re.compile(r"[#@]\w+|\w+|[^\w\s]")


def normalize(text):
    return unicodedata.normalize("NFC", text).lower()


def tokenize(text):
    tokens = []
    for tok in _TOKEN_RE.findall(normalize(text)):
        if len(tok) == 1 and unicodedata.category(tok).startswith("P"):
            continue
        tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple  # id -> token; ids are positions

    def __post_init__(self):
        if tuple(self.tokens[:3]) != RESERVED:
            raise ValueError("vocabulary must start with the reserved [PAD], [UNK], [CLS] tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    @property
    def token_to_id(self):
        return dict(self._index)

    def id(self, token):
        return self._index.get(token, UNK)

    def save(self, path):
        with atomic_write(path, newline="\n") as fh:
            for i, tok in enumerate(self.tokens):
                fh.write(f"{tok}\t{i}\n")

    @classmethod
    def load(cls, path):
        tokens = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, _, idx = line.rpartition("\t")
                if not _ or int(idx) != len(tokens):
                    raise ValueError(f"{path}: line {lineno}: ids must be contiguous and sorted")
                tokens.append(tok)
        return cls(tuple(tokens))


def build_vocab(corpus, max_size=8000, min_freq=1):
    """Build a vocabulary from tweets (or raw strings).

    Tokens are ranked by frequency, descending, then lexicographically; the
    top ``max_size - 3`` with at least ``min_freq`` occurrences get ids
    from 3 upward.
    """
    if max_size < 4:
        raise ValueError("max_size must be >= 4")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    texts = [getattr(doc, "text", doc) for doc in corpus]
    if not texts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for text in texts:
        counts.update(tokenize(text))
    for tok in RESERVED:
        counts.pop(tok, None)
    ranked = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocabulary(RESERVED + tuple(ranked[: max_size - len(RESERVED)]))


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple
    attention_mask: tuple


def encode(text, vocab, max_len=64):
    if not 1 <= max_len <= MAX_SEQ_LEN:
        raise ValueError(f"max_len must be in [1, {MAX_SEQ_LEN}]")
    ids = [CLS] + [vocab.id(t) for t in tokenize(text)]
    ids = ids[:max_len]
    n = len(ids)
    return TokenSequence(tuple(ids + [PAD] * (max_len - n)), (1,) * n + (0,) * (max_len - n))


def encode_batch(texts, vocab, max_len=64):
    """Encode texts into ``(ids, mask)`` arrays of shape (n, max_len)."""
    seqs = [encode(t, vocab, max_len) for t in texts]
    return stack(seqs, max_len)


def stack(seqs, max_len=None):
    """Stack TokenSequences into ``(ids int64, mask int8)`` arrays."""
    if not seqs:
        width = max_len or 1
        return np.zeros((0, width), dtype=np.int64), np.zeros((0, width), dtype=np.int8)
    ids = np.array([s.ids for s in seqs], dtype=np.int64)
    mask = np.array([s.attention_mask for s in seqs], dtype=np.int8)
    return ids, mask
