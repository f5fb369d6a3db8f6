"""Timing comparison of the numba kernels against their numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
(the numpy path is what you get everywhere with NLSLAB_PURE_NUMPY=1)
"""

import time

import numpy as np

from nlslab import kernels

if not kernels.HAS_NUMBA:
    raise SystemExit("numba not importable: nothing to compare")


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (includes jit compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_second_diff():
    print("second_diff_power_sum (the Besov-norm accumulation)")
    rng = np.random.default_rng(0)
    cases = [
        ("1d n=2048, 512 shifts", 1, 2048, 512),
        ("2d n=256, 800 shifts", 2, 256, 800),
        ("3d n=64, 400 shifts", 3, 64, 400),
    ]
    for label, dim, n, n_shifts in cases:
        vals = rng.standard_normal((n,) * dim) + 1j * rng.standard_normal((n,) * dim)
        shifts = rng.integers(-n // 2 + 1, n // 2, size=(n_shifts, dim))
        weights = rng.random(n_shifts)
        t_np = timeit(kernels.second_diff_power_sum_numpy, vals, shifts, weights)
        t_nb = timeit(kernels.second_diff_power_sum_numba, vals, shifts, weights)
        print(f"  {label:26s} numpy {t_np * 1e3:8.2f} ms   numba {t_nb * 1e3:8.2f} ms"
              f"   speedup {t_np / t_nb:5.1f}x")


def bench_gauge_phase():
    print("gauge_phase (split-step nonlinear kick)")
    rng = np.random.default_rng(1)
    for n in (1 << 14, 1 << 18):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t_np = timeit(kernels.gauge_phase_numpy, u, -0.3, 3, repeat=20)
        t_nb = timeit(kernels.gauge_phase_numba, u, -0.3, 3, repeat=20)
        print(f"  n={n:7d}                  numpy {t_np * 1e3:8.3f} ms   "
              f"numba {t_nb * 1e3:8.3f} ms   speedup {t_np / t_nb:5.1f}x")


def bench_taylor():
    print("taylor_remainder_sum (modulated potential integrand)")
    rng = np.random.default_rng(2)
    for n in (1 << 16, 1 << 20):
        x = rng.random(n)
        y = rng.random(n)
        t_np = timeit(kernels.taylor_remainder_sum_numpy, x, y, 3, repeat=20)
        t_nb = timeit(kernels.taylor_remainder_numba, x, y, 3, repeat=20)
        print(f"  n={n:7d}                  numpy {t_np * 1e3:8.3f} ms   "
              f"numba {t_nb * 1e3:8.3f} ms   speedup {t_np / t_nb:5.1f}x")


if __name__ == "__main__":
    print(f"active backend by default: {kernels.active_backend()}")
    bench_second_diff()
    bench_gauge_phase()
    bench_taylor()
