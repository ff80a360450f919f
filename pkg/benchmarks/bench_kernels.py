#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the four hot reductions on a few instance sizes and prints the
speedup.  The weighted loss+gradient kernel dominates algorithm runtime
(it runs once per solver iteration), so that row matters most.

Usage: python benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import time

import numpy as np

from batchreg.backend import get_backend

SIZES = [
    (100, 50, 8),
    (400, 300, 16),
    (800, 500, 32),
]


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    numpy_k = get_backend("numpy")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        print("compiled extension not available; nothing to compare")
        return

    rng = np.random.default_rng(0)
    header = f"{'kernel':28s} {'m,n,d':>14s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for m, n, d in SIZES:
        x = np.ascontiguousarray(rng.standard_normal((m, n, d)))
        y = np.ascontiguousarray(x @ rng.standard_normal(d) + rng.standard_normal((m, n)))
        w = rng.standard_normal(d)
        p = rng.random(m)
        p /= p.sum()
        kappa = 1.0
        calls = {
            "abs_residual_means": lambda k: k.abs_residual_means(x, y, w),
            "clipped_loss_means": lambda k: k.clipped_loss_means(x, y, w, kappa),
            "clipped_grad_means": lambda k: k.clipped_grad_means(x, y, w, kappa),
            "weighted_loss_grad": lambda k: k.weighted_loss_grad(x, y, p, w, kappa),
        }
        for name, call in calls.items():
            t_np = time_call(lambda: call(numpy_k), args.repeats)
            t_c = time_call(lambda: call(compiled), args.repeats)
            print(
                f"{name:28s} {f'{m},{n},{d}':>14s} {t_np * 1e3:9.3f}ms "
                f"{t_c * 1e3:9.3f}ms {t_np / t_c:7.2f}x"
            )


if __name__ == "__main__":
    main()
