"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

The package's hot kernels (the coin-betting scale step and the barrier
FTRL Newton solve) are plain numpy functions wrapped with an optional
``numba.njit``.  This script times both paths on identical inputs:

    python3 benchmarks/bench_kernels.py

The fallback path can also be selected globally for any run of the package
by setting ``CABANDITS_DISABLE_NUMBA=1``.
"""
import time

import numpy as np

from cabandits._accel import NUMBA_ENABLED, kernel_source
from cabandits.direction import _ftrl_newton
from cabandits.geometry import BALL
from cabandits.scale import _scale_step


def time_fn(fn, args_iter, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for args in args_iter:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_scale_step(n=200_000):
    gen = np.random.default_rng(0)
    grads = gen.uniform(-1.0, 1.0, n)

    def drive(fn):
        wealth, comp, fraction, grad_sq = 1.0, 0.0, 0.0, 1.0
        start = time.perf_counter()
        for g in grads:
            v = fraction * wealth
            wealth, comp, fraction, grad_sq, _ = fn(
                wealth, comp, fraction, grad_sq, v, g, 1.0, 0.0, np.inf)
        return time.perf_counter() - start

    jit, py = _scale_step, kernel_source(_scale_step)
    drive(jit)  # compile
    t_jit = min(drive(jit) for _ in range(3))
    t_py = min(drive(py) for _ in range(3))
    return "scale step", n, t_jit, t_py


def bench_ftrl_newton(n=2_000, d=5):
    gen = np.random.default_rng(1)
    pvec = np.array([1.0])
    pmat = np.zeros((1, 1))
    glins = [gen.standard_normal(d) for _ in range(n)]

    def drive(fn):
        x = np.zeros(d)
        start = time.perf_counter()
        for glin in glins:
            x, ok = fn(BALL, pvec, pmat, x, glin, 1e-10, 200)
            assert ok
        return time.perf_counter() - start

    jit, py = _ftrl_newton, kernel_source(_ftrl_newton)
    drive(jit)  # compile
    t_jit = min(drive(jit) for _ in range(3))
    t_py = min(drive(py) for _ in range(3))
    return "barrier FTRL Newton", n, t_jit, t_py


def main():
    print(f"numba enabled: {NUMBA_ENABLED}")
    print(f"{'kernel':<22}{'calls':>10}{'jit (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for bench in (bench_scale_step, bench_ftrl_newton):
        name, n, t_jit, t_py = bench()
        speedup = t_py / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<22}{n:>10}{t_jit:>12.4f}{t_py:>12.4f}{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
