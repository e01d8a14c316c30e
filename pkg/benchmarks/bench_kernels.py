#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot loops (Monte Carlo signal-to-noise evaluation and
Nadaraya-Watson weight sums) plus an end-to-end Monte Carlo run on each
available backend and prints a comparison table.

Run: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from smmport import LcemModel, McConfig, estimate_q
from smmport import kernels
from smmport.lcem import BLOCK_SIZE


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_lcem_kernel(impl, repeats):
    rng = np.random.default_rng(0)
    feats = rng.standard_normal((BLOCK_SIZE, 3))
    b_mat = np.array([[0.04, 0.02, -0.03], [-0.03, -0.02, 0.02]])
    chol = np.linalg.cholesky(np.array([[1.0, -0.1], [-0.1, 1.0]]))
    kernels.lcem_s_values(feats, b_mat, chol, impl=impl)  # warm up
    return best_of(lambda: kernels.lcem_s_values(feats, b_mat, chol, impl=impl),
                   repeats)


def bench_nw_kernel(impl, repeats):
    rng = np.random.default_rng(1)
    xs = rng.uniform(0.5, 2.5, 20000)
    ys = np.vstack([rng.standard_normal(20000), rng.standard_normal(20000)])
    grid = np.linspace(0.5, 2.5, 101)
    kernels.nw_sums(xs, ys, grid, 0.1, impl=impl)  # warm up
    return best_of(lambda: kernels.nw_sums(xs, ys, grid, 0.1, impl=impl), repeats)


def bench_estimate_q(impl, repeats):
    model = LcemModel(
        B=[[0.04, 0.02, -0.03], [-0.03, -0.02, 0.02]],
        sigma=[[1.0, -0.1], [-0.1, 1.0]],
        feature_mean=[1.0, 1.0, -2.0],
        feature_cov=np.eye(3),
    )
    cfg = McConfig(n_samples=500_000, seed=0)
    saved = kernels._impl
    kernels._impl = impl
    try:
        estimate_q(model, cfg)  # warm up
        return best_of(lambda: estimate_q(model, cfg), repeats)
    finally:
        kernels._impl = saved


BENCHES = [
    (f"s-values, one block of {BLOCK_SIZE} samples", bench_lcem_kernel),
    ("kernel regression sums, T=20000 G=101 R=2", bench_nw_kernel),
    ("estimate_q end to end, n=500000", bench_estimate_q),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}")
    print(f"available: {', '.join(sorted(backends))}")
    print()
    header = f"{'benchmark':<44} " + " ".join(f"{name:>12}" for name in sorted(backends))
    if len(backends) > 1:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, bench in BENCHES:
        results = {name: bench(impl, args.repeats)
                   for name, impl in backends.items()}
        row = f"{label:<44} " + " ".join(
            f"{results[name] * 1e3:>10.2f}ms" for name in sorted(backends)
        )
        if "cython" in results and "python" in results:
            row += f" {results['python'] / results['cython']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
