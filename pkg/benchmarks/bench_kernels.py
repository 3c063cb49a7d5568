"""Benchmark the JIT-compiled kernels against their pure-numpy fallbacks.

Runs the same workloads through both code paths and prints a timing
table. The first JIT call includes compilation (cached on disk for later
runs); timings below exclude it via a warmup call.

Usage:
    python benchmarks/bench_kernels.py
    POTD_NUMBA=0 python benchmarks/bench_kernels.py   # fallback only
"""

import time

import numpy as np

from potd.kernels import (
    JIT_ENABLED,
    pairwise_sqdist_numpy,
    sinkhorn_scaling_numpy,
)

if JIT_ENABLED:
    from potd.kernels import pairwise_sqdist_jit, sinkhorn_scaling_jit

REPEATS = 5


def best_of(func, *args):
    times = []
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_pairwise(rng):
    print("\npairwise squared distances (n x n, p=10)")
    print(f"{'n':>6} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for n in (100, 400, 1000):
        x = rng.normal(size=(n, 10))
        y = rng.normal(size=(n, 10))
        t_np = best_of(pairwise_sqdist_numpy, x, y)
        if JIT_ENABLED:
            pairwise_sqdist_jit(x, y)  # warmup/compile
            t_jit = best_of(pairwise_sqdist_jit, x, y)
            print(f"{n:>6} {t_np * 1e3:>12.3f} {t_jit * 1e3:>12.3f} {t_np / t_jit:>8.1f}x")
        else:
            print(f"{n:>6} {t_np * 1e3:>12.3f} {'-':>12} {'-':>9}")


def sinkhorn_workload(rng, n, eps_factor=0.01):
    x = rng.normal(size=(n, 10))
    y = rng.normal(size=(n, 10)) + 0.5
    cost = pairwise_sqdist_numpy(x, y)
    neg_cost = -cost / (eps_factor * cost.max())
    log_marg = np.log(np.full(n, 1.0 / n))
    return neg_cost, log_marg


def bench_sinkhorn(rng):
    print("\nlog-domain scaling to 1e-9 marginal error (n x n, eps = 0.01 max cost)")
    print(f"{'n':>6} {'sweeps':>7} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for n in (50, 150, 400):
        neg_cost, log_marg = sinkhorn_workload(rng, n)
        args = (neg_cost, log_marg, log_marg, 100_000, 1e-9)
        sweeps = sinkhorn_scaling_numpy(*args)[2]
        t_np = best_of(sinkhorn_scaling_numpy, *args)
        if JIT_ENABLED:
            sinkhorn_scaling_jit(*args)  # warmup/compile
            t_jit = best_of(sinkhorn_scaling_jit, *args)
            print(
                f"{n:>6} {sweeps:>7} {t_np * 1e3:>12.1f} {t_jit * 1e3:>12.1f} "
                f"{t_np / t_jit:>8.1f}x"
            )
        else:
            print(f"{n:>6} {sweeps:>7} {t_np * 1e3:>12.1f} {'-':>12} {'-':>9}")


def main():
    print(f"JIT enabled: {JIT_ENABLED}")
    rng = np.random.default_rng(np.random.SeedSequence([123]))
    bench_pairwise(rng)
    bench_sinkhorn(rng)


if __name__ == "__main__":
    main()
