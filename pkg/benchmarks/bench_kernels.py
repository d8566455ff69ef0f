"""Time the compiled and numpy kernel backends side by side.

    python benchmarks/bench_kernels.py [--repeat 20] [--batch 32]

GELU is not compiled (numpy's vectorised tanh is faster than a scalar
loop), so it is absent here. Shapes follow the default model (d_model 64, 4 heads, d_ffn 128,
max_len 64). The last rows time one full loss-and-gradient pass of that
model with each backend swapped in.
"""

import argparse
import timeit

import numpy as np

from tweettone import kernels
from tweettone.neuralnet import ModelConfig, init_model, loss_and_grads


def kernel_cases(batch, rng):
    t, d, h = 64, 64, 4
    x = rng.standard_normal((batch * t, d))
    gamma, beta = rng.standard_normal(d), rng.standard_normal(d)
    scores = rng.standard_normal((batch, h, t, t))
    mask = (np.arange(t)[None, :] < rng.integers(4, t + 1, size=batch)[:, None]).astype(np.int8)
    y = (rng.random((2000, 7)) < 0.3).astype(np.int8)
    probs_ = rng.random((2000, 7))

    def cases(k):
        _, xhat, rstd = k.layernorm_forward(x, gamma, beta, 1e-5)
        attn = k.masked_softmax(scores, mask)
        return {
            "layernorm_forward": lambda: k.layernorm_forward(x, gamma, beta, 1e-5),
            "layernorm_backward": lambda: k.layernorm_backward(x, xhat, rstd, gamma),
            "masked_softmax": lambda: k.masked_softmax(scores, mask),
            "softmax_backward": lambda: k.softmax_backward(attn, scores),
            "lrap_samples (2000x7)": lambda: k.lrap_samples(y, probs_),
        }
    return cases


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--batch", type=int, default=32)
    args = parser.parse_args()

    backends = kernels.available_backends()
    rng = np.random.default_rng(0)
    cases = kernel_cases(args.batch, rng)
    table = {name: {b: best_of(fn, args.repeat) for b in backends
                    for fn in [cases(kernels.get_backend(b))[name]]}
             for name in cases(kernels.get_backend("python"))}

    cfg = ModelConfig(vocab_size=2000)
    params = init_model(cfg)
    ids = rng.integers(3, cfg.vocab_size, size=(args.batch, cfg.max_len))
    mask = (np.arange(cfg.max_len)[None, :] < rng.integers(8, cfg.max_len, size=args.batch)[:, None]).astype(np.int8)
    ids = np.where(mask == 1, ids, 0)
    targets = (rng.random((args.batch, 7)) < 0.3).astype(float)
    active = kernels._impl
    row = {}
    try:
        for b in backends:
            kernels._impl = kernels.get_backend(b)
            row[b] = best_of(lambda: loss_and_grads(params, ids, mask, targets), max(3, args.repeat // 4))
    finally:
        kernels._impl = active
    table[f"loss_and_grads (batch {args.batch})"] = row

    width = max(len(n) for n in table) + 2
    print(f"{'kernel':<{width}}" + "".join(f"{b + ' ms':>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for name, times in table.items():
        line = f"{name:<{width}}" + "".join(f"{times[b] * 1e3:12.3f}" for b in backends)
        if len(backends) == 2:
            line += f"{times['python'] / times['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
