"""A small post-LN transformer encoder with a 7-way sigmoid head.

Everything is float64 numpy with hand-written backward passes. Parameters
live in a flat ``{name: ndarray}`` mapping inside :class:`ModelParams`;
gradients use the same keys.

Per layer::

    r1 = x + MHA(x, mask);   h = LN1(r1)
    r2 = h + W2 gelu(W1 h);  x' = LN2(r2)

The head reads the encoder state at position 0 (the [CLS] slot).
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .io import atomic_write
from .textprep import MAX_SEQ_LEN
from .tones import N_TONES

LN_EPS = 1e-5
_MAGIC = b"TWEETTONE-CKPT 1\n"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 8000
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ffn: int = 128
    max_len: int = 64
    n_labels: int = N_TONES
    seed: int = 0

    def validate(self):
        if self.d_model % self.n_heads:
            raise ModelError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.n_labels != N_TONES:
            raise ModelError(f"n_labels must be {N_TONES}")
        if not 1 <= self.max_len <= MAX_SEQ_LEN:
            raise ModelError(f"max_len must be in [1, {MAX_SEQ_LEN}]")
        for name in ("vocab_size", "d_model", "n_heads", "d_ffn"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be positive")
        if self.n_layers < 0:
            raise ModelError("n_layers must be >= 0")
        return self


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict = field(repr=False)

    def __getitem__(self, name):
        return self.tensors[name]

    def names(self):
        return list(self.tensors)

    def copy(self):
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self):
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def n_parameters(self):
        return sum(v.size for v in self.tensors.values())


def positional_table(max_len, d_model):
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    freq = np.exp(-math.log(10000.0) * (np.arange(0, d_model, 2, dtype=np.float64) / d_model))
    table = np.zeros((max_len, d_model))
    table[:, 0::2] = np.sin(pos * freq)
    table[:, 1::2] = np.cos(pos * freq[: d_model // 2])
    return table


def _layer_shapes(cfg, l):
    d, f = cfg.d_model, cfg.d_ffn
    p = f"layer{l}."
    return [
        (p + "wq", (d, d)), (p + "bq", (d,)),
        (p + "wk", (d, d)), (p + "bk", (d,)),
        (p + "wv", (d, d)), (p + "bv", (d,)),
        (p + "wo", (d, d)), (p + "bo", (d,)),
        (p + "ln1.g", (d,)), (p + "ln1.b", (d,)),
        (p + "w1", (d, f)), (p + "b1", (f,)),
        (p + "w2", (f, d)), (p + "b2", (d,)),
        (p + "ln2.g", (d,)), (p + "ln2.b", (d,)),
    ]


def param_shapes(cfg):
    shapes = [("embed", (cfg.vocab_size, cfg.d_model))]
    for l in range(cfg.n_layers):
        shapes.extend(_layer_shapes(cfg, l))
    shapes += [("head.w", (cfg.d_model, cfg.n_labels)), ("head.b", (cfg.n_labels,))]
    return shapes


def init_model(config):
    """Seeded init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, LN gains 1.

    The embedding table uses d_model as its fan-in.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    tensors = {}
    for name, shape in param_shapes(config):
        if name.endswith(".g"):
            tensors[name] = np.ones(shape)
        elif len(shape) == 1:
            tensors[name] = np.zeros(shape)
        else:
            fan_in = shape[1] if name == "embed" else shape[0]
            bound = 1.0 / math.sqrt(fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(config, tensors)


def _check_batch(params, ids, mask):
    cfg = params.config
    ids = np.asarray(ids)
    mask = np.asarray(mask)
    if ids.ndim != 2 or ids.shape != mask.shape:
        raise ModelError(f"ids and mask must be matching 2-D arrays, got {ids.shape} and {mask.shape}")
    if ids.shape[1] > cfg.max_len:
        raise ModelError(f"sequence length {ids.shape[1]} exceeds max_len {cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ModelError(f"token id out of range for vocab_size {cfg.vocab_size}")
    return ids.astype(np.int64, copy=False), mask.astype(np.int8, copy=False)


def _split_heads(x, h):
    b, t, d = x.shape
    return x.reshape(b, t, h, d // h).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def forward(params, ids, mask, return_cache=False):
    """Return the (B, 7) logits, optionally with the activation cache."""
    ids, mask = _check_batch(params, ids, mask)
    cfg = params.config
    P = params.tensors
    b, t = ids.shape
    h = cfg.n_heads
    scale = 1.0 / math.sqrt(cfg.d_model // h)

    x = P["embed"][ids] + positional_table(t, cfg.d_model)[None]
    layers = []
    for l in range(cfg.n_layers):
        p = f"layer{l}."
        q = _split_heads(x @ P[p + "wq"] + P[p + "bq"], h)
        k = _split_heads(x @ P[p + "wk"] + P[p + "bk"], h)
        v = _split_heads(x @ P[p + "wv"] + P[p + "bv"], h)
        attn = kernels.masked_softmax((q @ k.transpose(0, 1, 3, 2)) * scale, mask)
        a = _merge_heads(attn @ v)
        r1 = x + a @ P[p + "wo"] + P[p + "bo"]
        h1, xhat1, rstd1 = kernels.layernorm_forward(r1, P[p + "ln1.g"], P[p + "ln1.b"], LN_EPS)
        u = h1 @ P[p + "w1"] + P[p + "b1"]
        g = kernels.gelu_forward(u)
        r2 = h1 + g @ P[p + "w2"] + P[p + "b2"]
        x_next, xhat2, rstd2 = kernels.layernorm_forward(r2, P[p + "ln2.g"], P[p + "ln2.b"], LN_EPS)
        if return_cache:
            layers.append(dict(x=x, q=q, k=k, v=v, attn=attn, a=a, h1=h1, xhat1=xhat1, rstd1=rstd1,
                               u=u, g=g, xhat2=xhat2, rstd2=rstd2))
        x = x_next
    pooled = x[:, 0, :]
    # stacked (1, d) @ (d, 7) products keep each row's rounding independent
    # of batch size, so a tweet gets the same logits however it is batched
    logits = (pooled[:, None, :] @ P["head.w"])[:, 0, :] + P["head.b"]
    if not return_cache:
        return logits
    return logits, dict(ids=ids, mask=mask, layers=layers, pooled=pooled, seq_len=t)


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def predict_proba(params, ids, mask):
    return sigmoid(forward(params, ids, mask))


def bce_with_logits(logits, targets):
    """Per-element binary cross-entropy, stable for any logit."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


def backward(params, cache, dlogits):
    """Gradients of a scalar w.r.t. every tensor, given d(scalar)/d(logits)."""
    cfg = params.config
    P = params.tensors
    grads = {}
    h = cfg.n_heads
    scale = 1.0 / math.sqrt(cfg.d_model // h)
    ids = cache["ids"]
    b, t = ids.shape

    grads["head.w"] = cache["pooled"].T @ dlogits
    grads["head.b"] = dlogits.sum(axis=0)
    dx = np.zeros((b, t, cfg.d_model))
    dx[:, 0, :] = dlogits @ P["head.w"].T

    for l in reversed(range(cfg.n_layers)):
        p = f"layer{l}."
        c = cache["layers"][l]
        dr2, grads[p + "ln2.g"], grads[p + "ln2.b"] = kernels.layernorm_backward(
            dx, c["xhat2"], c["rstd2"], P[p + "ln2.g"])
        d_ffn = cfg.d_ffn
        grads[p + "w2"] = c["g"].reshape(-1, d_ffn).T @ dr2.reshape(-1, cfg.d_model)
        grads[p + "b2"] = dr2.sum(axis=(0, 1))
        du = kernels.gelu_backward(c["u"], dr2 @ P[p + "w2"].T)
        grads[p + "w1"] = c["h1"].reshape(-1, cfg.d_model).T @ du.reshape(-1, d_ffn)
        grads[p + "b1"] = du.sum(axis=(0, 1))
        dh1 = dr2 + du @ P[p + "w1"].T

        dr1, grads[p + "ln1.g"], grads[p + "ln1.b"] = kernels.layernorm_backward(
            dh1, c["xhat1"], c["rstd1"], P[p + "ln1.g"])
        flat_x = c["x"].reshape(-1, cfg.d_model)
        grads[p + "wo"] = c["a"].reshape(-1, cfg.d_model).T @ dr1.reshape(-1, cfg.d_model)
        grads[p + "bo"] = dr1.sum(axis=(0, 1))
        da = _split_heads(dr1 @ P[p + "wo"].T, h)
        dattn = da @ c["v"].transpose(0, 1, 3, 2)
        dv = c["attn"].transpose(0, 1, 3, 2) @ da
        ds = kernels.softmax_backward(c["attn"], dattn) * scale
        dq = ds @ c["k"]
        dk = ds.transpose(0, 1, 3, 2) @ c["q"]
        dx_next = dr1
        for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
            dproj = _merge_heads(dproj)
            grads[p + "w" + name] = flat_x.T @ dproj.reshape(-1, cfg.d_model)
            grads[p + "b" + name] = dproj.sum(axis=(0, 1))
            dx_next = dx_next + dproj @ P[p + "w" + name].T
        dx = dx_next

    dembed = np.zeros_like(P["embed"])
    np.add.at(dembed, ids.reshape(-1), dx.reshape(-1, cfg.d_model))
    grads["embed"] = dembed
    return {name: grads[name] for name in P}


def loss_and_grads(params, ids, mask, targets, reduction="mean"):
    """Binary cross-entropy averaged over the 7 labels, and its exact gradient.

    ``reduction="mean"`` also averages over examples; ``"sum"`` sums the
    per-example losses, which lets callers combine sub-batches exactly.
    """
    targets = np.asarray(targets, dtype=np.float64)
    logits, cache = forward(params, ids, mask, return_cache=True)
    if targets.shape != logits.shape:
        raise ModelError(f"targets shape {targets.shape} does not match logits {logits.shape}")
    n = logits.shape[0]
    if n == 0:
        raise ModelError("empty batch")
    n_labels = logits.shape[1]
    per_example = bce_with_logits(logits, targets).mean(axis=1)
    if reduction == "mean":
        denom = n * n_labels
        loss = per_example.mean()
    elif reduction == "sum":
        denom = n_labels
        loss = per_example.sum()
    else:
        raise ValueError(f"unknown reduction {reduction!r}")
    dlogits = (sigmoid(logits) - targets) / denom
    return float(loss), backward(params, cache, dlogits)


def save_checkpoint(params, path):
    """Write config and tensors to a single self-describing binary file.

    Layout: a magic line, a JSON header line (config plus name/shape per
    tensor), then the raw little-endian float64 payloads in header order.
    """
    header = {
        "config": asdict(params.config),
        "tensors": [{"name": k, "shape": list(v.shape), "dtype": "<f8"} for k, v in params.tensors.items()],
    }
    with atomic_write(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for v in params.tensors.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise ModelError(f"{path}: not a tweettone checkpoint")
        header = json.loads(fh.readline().decode("utf-8"))
        config = ModelConfig(**header["config"]).validate()
        tensors = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise ModelError(f"{path}: truncated tensor {spec['name']}")
            tensors[spec["name"]] = np.frombuffer(raw, dtype=spec["dtype"]).astype(np.float64).reshape(shape)
        if fh.read(1):
            raise ModelError(f"{path}: trailing bytes after tensors")
    expected = dict(param_shapes(config))
    got = {k: v.shape for k, v in tensors.items()}
    if got != {k: tuple(s) for k, s in expected.items()}:
        raise ModelError(f"{path}: tensor shapes do not match the stored config")
    return ModelParams(config, tensors)
