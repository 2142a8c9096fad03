"""Benchmark the compiled sampling kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from specdiff import _kernels_py
from specdiff import oracle, simulate, specs

try:
    from specdiff import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_euler(impl, n_obs=20_000, substeps=50):
    rng = np.random.default_rng(12)
    xs = np.linspace(0.0, 1.0, 4097)
    sigma_tab = 1.0 + 0.3 * np.cos(np.pi * xs)
    b_tab = 0.7 * np.cos(2.0 * np.pi * xs)
    normals = rng.standard_normal(n_obs * substeps)
    out = np.empty(n_obs + 1)
    dt = 0.1 / substeps
    t = _time(impl.euler_path, 0.5, normals, dt, np.sqrt(dt), substeps,
              sigma_tab, b_tab, out)
    return n_obs * substeps / t


def bench_exact(impl, n_obs=100_000):
    spec = specs.preset("linear_drift")
    dec = oracle.generator_eigs(spec, 512, 64)
    rows = simulate.conditional_cdfs(dec, 0.1)
    rng = np.random.default_rng(34)
    draws = rng.random(n_obs + 1)
    out = np.empty(n_obs + 1)
    t = _time(impl.exact_path, draws[0], draws[1:], dec.grid, dec.mu_cdf,
              rows, out)
    return n_obs / t


def main():
    rows = []
    for name, bench in (("euler", bench_euler), ("exact", bench_exact)):
        py_rate = bench(_kernels_py)
        if _kernels is not None:
            c_rate = bench(_kernels)
            rows.append((name, py_rate, c_rate, c_rate / py_rate))
        else:
            rows.append((name, py_rate, None, None))

    print(f"{'kernel':<8} {'python steps/s':>16} {'compiled steps/s':>18} {'speedup':>9}")
    for name, py_rate, c_rate, ratio in rows:
        if c_rate is None:
            print(f"{name:<8} {py_rate:>16,.0f} {'(not built)':>18} {'-':>9}")
        else:
            print(f"{name:<8} {py_rate:>16,.0f} {c_rate:>18,.0f} {ratio:>8.1f}x")
    if _kernels is None:
        print("\ncompiled module missing; build with: python setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
