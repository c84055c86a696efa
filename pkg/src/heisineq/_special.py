"""Cancellation-free kernels shared by the geodesic and distortion formulas.

All functions are vectorized over numpy arrays and even/odd as noted.
"""

from __future__ import annotations

from math import factorial

import numpy as np

SERIES_CUTOFF = 0.1

# (x - sin x) / x^2 = sum_{k>=1} (-1)^(k+1) x^(2k-1) / (2k+1)!
_TC_COEF = np.array([(-1) ** (k + 1) / factorial(2 * k + 1) for k in range(1, 10)])
# (sin x - x cos x) / x^3 = sum_{k>=1} (-1)^(k+1) 2k x^(2k-2) / (2k+1)!
_Q_COEF = np.array([(-1) ** (k + 1) * 2 * k / factorial(2 * k + 1) for k in range(1, 10)])
# d/dx (x - sin x)/(1 - cos x), even series (Bernoulli-number coefficients)
_NUP_COEF = np.array([1 / 3, 1 / 30, 1 / 504, 1 / 10800, 1 / 266112, 691 / 4953312000])


def _even_series(coef: np.ndarray, x2: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x2)
    for c in coef[::-1]:
        out = out * x2 + c
    return out


def sinc(x):
    """sin(x)/x with value 1 at 0 (unnormalized)."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def tcoef(x):
    """(x - sin x) / x**2, odd, ~ x/6 near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    closed = (safe - np.sin(safe)) / safe**2
    series = x * _even_series(_TC_COEF, x * x)
    return np.where(small, series, closed)


def qfun(x):
    """(sin x - x cos x) / x**3, even, 1/3 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    closed = (np.sin(safe) - safe * np.cos(safe)) / safe**3
    series = _even_series(_Q_COEF, x * x)
    return np.where(small, series, closed)


def efun(x):
    """i (exp(-i x) - 1) / x, the horizontal factor of the geodesic; 1 at 0."""
    x = np.asarray(x, dtype=float)
    half = sinc(0.5 * x)
    return sinc(x) - 1j * (0.5 * x) * half * half


def nu(theta):
    """(theta - sin theta) / (1 - cos theta); odd, increasing on (-2pi, 2pi)."""
    theta = np.asarray(theta, dtype=float)
    half = sinc(0.5 * theta)
    return 2.0 * tcoef(theta) / (half * half)


def nu_prime(theta):
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SERIES_CUTOFF
    safe = np.where(small, 1.0, theta)
    closed = 1.0 - nu(safe) / np.tan(0.5 * safe)
    series = _even_series(_NUP_COEF, theta * theta)
    return np.where(small, series, closed)


def bracketed_newton(f, fprime, lo, hi, x0, tol=1e-13, max_iter=100):
    """Vectorized safeguarded Newton for increasing f with f(lo) < 0 < f(hi).

    Returns (root, converged_mask). Steps leaving the current bracket fall back to
    bisection, so the iteration is globally convergent for monotone f.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    x = np.clip(np.array(x0, dtype=float, copy=True), lo, hi)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        fa = f(xa, idx)
        lo_a = np.where(fa < 0, xa, lo[idx])
        hi_a = np.where(fa > 0, xa, hi[idx])
        step = fa / fprime(xa, idx)
        # a converged step may land on the bracket end through rounding; accept it first
        small = np.abs(step) <= tol * np.maximum(1.0, np.abs(xa))
        new = xa - step
        bad = ~small & (~np.isfinite(new) | (new <= lo_a) | (new >= hi_a))
        new = np.where(bad, 0.5 * (lo_a + hi_a), np.clip(new, lo_a, hi_a))
        new = np.where(fa == 0, xa, new)
        lo[idx], hi[idx], x[idx] = lo_a, hi_a, new
        done = small | (fa == 0) | (hi_a - lo_a <= tol)
        active[idx[done]] = False
    return x, ~active
