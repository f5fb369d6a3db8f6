"""Hot inner-loop kernels, in two flavours.

Every kernel has a pure-numpy reference implementation
(``*_numpy``) and, when numba is importable, an ``@njit`` version
(``*_numba``).  The public aliases (``second_diff_power_sum``,
``gauge_phase``, ``taylor_remainder_sum``) point at the numba build
unless the environment variable ``NLSLAB_PURE_NUMPY`` is set to a
truthy value, in which case the numpy path is used everywhere.

FFT-based operators are *not* here: numba has no FFT support, so the
spectral kernels stay on numpy/scipy (see ``benchmarks/bench_kernels.py``
for the comparison of the paths that do live here).
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("NLSLAB_PURE_NUMPY", "").lower() not in (
    "1", "true", "yes", "on",
)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False
    USE_NUMBA = False


def active_backend() -> str:
    return "numba" if (USE_NUMBA and HAS_NUMBA) else "numpy"


# ---------------------------------------------------------------------------
# second differences:  sum_s w_s * sum_x |f(x+y_s) + f(x-y_s) - 2 f(x)|^2
# shifts are index offsets on the periodic grid.
# ---------------------------------------------------------------------------

def second_diff_power_sum_numpy(vals, shifts, weights):
    vals = np.asarray(vals)
    d = vals.ndim
    total = 0.0
    for s, w in zip(shifts, weights):
        plus = np.roll(vals, tuple(-int(c) for c in s), axis=tuple(range(d)))
        minus = np.roll(vals, tuple(int(c) for c in s), axis=tuple(range(d)))
        diff = plus + minus - 2.0 * vals
        total += w * float(np.sum(diff.real ** 2 + diff.imag ** 2))
    return total


if HAS_NUMBA:

    @njit(cache=True)
    def _second_diff_1d(vals, shifts, weights):
        n = vals.shape[0]
        total = 0.0
        for si in range(shifts.shape[0]):
            s = shifts[si, 0]
            acc = 0.0
            for i in range(n):
                diff = vals[(i + s) % n] + vals[(i - s) % n] - 2.0 * vals[i]
                acc += diff.real ** 2 + diff.imag ** 2
            total += weights[si] * acc
        return total

    @njit(cache=True)
    def _second_diff_2d(vals, shifts, weights):
        n0, n1 = vals.shape
        total = 0.0
        for si in range(shifts.shape[0]):
            s0, s1 = shifts[si, 0], shifts[si, 1]
            acc = 0.0
            for i in range(n0):
                ip = (i + s0) % n0
                im = (i - s0) % n0
                for j in range(n1):
                    diff = (
                        vals[ip, (j + s1) % n1]
                        + vals[im, (j - s1) % n1]
                        - 2.0 * vals[i, j]
                    )
                    acc += diff.real ** 2 + diff.imag ** 2
            total += weights[si] * acc
        return total

    @njit(cache=True)
    def _second_diff_3d(vals, shifts, weights):
        n0, n1, n2 = vals.shape
        total = 0.0
        for si in range(shifts.shape[0]):
            s0, s1, s2 = shifts[si, 0], shifts[si, 1], shifts[si, 2]
            acc = 0.0
            for i in range(n0):
                ip = (i + s0) % n0
                im = (i - s0) % n0
                for j in range(n1):
                    jp = (j + s1) % n1
                    jm = (j - s1) % n1
                    for p in range(n2):
                        diff = (
                            vals[ip, jp, (p + s2) % n2]
                            + vals[im, jm, (p - s2) % n2]
                            - 2.0 * vals[i, j, p]
                        )
                        acc += diff.real ** 2 + diff.imag ** 2
            total += weights[si] * acc
        return total

    def second_diff_power_sum_numba(vals, shifts, weights):
        vals = np.ascontiguousarray(vals, dtype=np.complex128)
        shifts = np.ascontiguousarray(shifts, dtype=np.int64)
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        if vals.ndim == 1:
            return _second_diff_1d(vals, shifts, weights)
        if vals.ndim == 2:
            return _second_diff_2d(vals, shifts, weights)
        if vals.ndim == 3:
            return _second_diff_3d(vals, shifts, weights)
        raise ValueError(f"unsupported dimension {vals.ndim}")


# ---------------------------------------------------------------------------
# gauge phase:  u * exp(1j * coef * |u|^(2m)),  integer m >= 1
# ---------------------------------------------------------------------------

def gauge_phase_numpy(u, coef, m):
    rho = u.real ** 2 + u.imag ** 2
    return u * np.exp(1j * coef * rho ** m)


if HAS_NUMBA:

    @njit(cache=True)
    def _gauge_phase_flat(u, coef, m):
        out = np.empty_like(u)
        for i in range(u.shape[0]):
            rho = u[i].real ** 2 + u[i].imag ** 2
            p = rho
            for _ in range(m - 1):
                p *= rho
            out[i] = u[i] * np.exp(1j * coef * p)
        return out

    def gauge_phase_numba(u, coef, m):
        flat = np.ascontiguousarray(u, dtype=np.complex128).reshape(-1)
        return _gauge_phase_flat(flat, float(coef), int(m)).reshape(u.shape)


# ---------------------------------------------------------------------------
# convex Taylor remainder:  sum_x F(x) - F(y) - (x - y) f(y),
# f(y) = y^m, F(y) = y^(m+1)/(m+1), x = |u|^2 and y = rho_tilde samples.
# ---------------------------------------------------------------------------

def taylor_remainder_sum_numpy(x, y, m):
    fy = y ** m
    return float(np.sum((x ** (m + 1) - y ** (m + 1)) / (m + 1) - (x - y) * fy))


if HAS_NUMBA:

    @njit(cache=True)
    def _taylor_remainder_flat(x, y, m):
        total = 0.0
        inv = 1.0 / (m + 1)
        for i in range(x.shape[0]):
            xp = x[i]
            yp = y[i]
            fx = xp
            fy = yp
            for _ in range(m):
                fx *= xp
                fy *= yp
            total += (fx - fy) * inv - (xp - yp) * yp ** m
        return total

    def taylor_remainder_numba(x, y, m):
        xf = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
        yf = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
        return _taylor_remainder_flat(xf, yf, int(m))


if USE_NUMBA and HAS_NUMBA:
    second_diff_power_sum = second_diff_power_sum_numba
    gauge_phase = gauge_phase_numba
    taylor_remainder_sum = taylor_remainder_numba
else:
    second_diff_power_sum = second_diff_power_sum_numpy
    gauge_phase = gauge_phase_numpy
    taylor_remainder_sum = taylor_remainder_sum_numpy
