"""Timing comparison of the compiled and pure-Python kernel backends.

Runs each hot kernel on protocol-sized inputs and prints the per-call time
for both implementations plus the speedup. Usage:

    python3 benchmarks/bench_backends.py [--batch 500] [--dim 3072] [--repeat 20]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from fedzge import _pykernels

try:
    from fedzge import _ckernels
except ImportError:
    _ckernels = None


def cases(batch: int, dim: int, hidden: int, classes: int):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, dim))
    w = rng.standard_normal((dim, hidden))
    b = rng.standard_normal(hidden)
    gy = rng.standard_normal((batch, hidden))
    gamma = np.ones(hidden)
    beta = np.zeros(hidden)
    logits = rng.standard_normal((batch, classes))
    small = rng.standard_normal((batch, 32))
    n = dim * hidden
    params = rng.standard_normal(n)
    grads = rng.standard_normal(n)
    m = np.zeros(n)
    v = np.zeros(n)

    def bn_args(k):
        y, mean, var, xhat = k.batchnorm_train_forward(gy, gamma, beta, 1e-5)
        return xhat, var

    return [
        ("dense_forward", lambda k: k.dense_forward(x, w, b)),
        ("dense_backward", lambda k: k.dense_backward(x, w, gy)),
        ("batchnorm_train_forward", lambda k: k.batchnorm_train_forward(gy, gamma, beta, 1e-5)),
        ("batchnorm_backward", lambda k, a=None: k.batchnorm_backward(*bn_args(k), gamma, gy, 1e-5)),
        ("leaky_relu_forward", lambda k: k.leaky_relu_forward(gy, 0.2)),
        ("tanh_forward", lambda k: k.tanh_forward(gy)),
        ("softmax_rows", lambda k: k.softmax_rows(logits)),
        ("pairwise_dist", lambda k: k.pairwise_dist(small)),
        ("adam_update", lambda k: k.adam_update(params.copy(), grads, m.copy(), v.copy(),
                                                1, 1e-3, 0.9, 0.999, 1e-8)),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=500)
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--hidden", type=int, default=128)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rows = cases(args.batch, args.dim, args.hidden, args.classes)
    print(f"batch={args.batch} dim={args.dim} hidden={args.hidden} "
          f"classes={args.classes} repeat={args.repeat}")
    header = f"{'kernel':<26}{'python (ms)':>14}{'c (ms)':>12}{'c/python':>12}"
    print(header)
    print("-" * len(header))
    for name, fn in rows:
        t_py = timeit.timeit(lambda: fn(_pykernels), number=args.repeat) / args.repeat
        if _ckernels is None:
            print(f"{name:<26}{t_py * 1e3:>14.3f}{'n/a':>12}{'n/a':>12}")
            continue
        t_c = timeit.timeit(lambda: fn(_ckernels), number=args.repeat) / args.repeat
        ratio = t_c / t_py if t_py > 0 else float("inf")
        print(f"{name:<26}{t_py * 1e3:>14.3f}{t_c * 1e3:>12.3f}{ratio:>12.2f}")
    if _ckernels is None:
        print("\ncompiled backend not built; install with the Cython extension to compare")


if __name__ == "__main__":
    main()
