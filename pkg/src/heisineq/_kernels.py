"""Compiled scalar kernels for exhaustive pair scans in H^1.

These re-implement, one pair at a time, the log / midpoint / distortion formulas
of ``ccgeo`` and ``distortion`` so that ~10^8 grid pairs fit in a few minutes.
The vectorized numpy versions remain the reference; tests compare the two.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from heisineq._special import _NUP_COEF, _Q_COEF, _TC_COEF

_TWO_PI = 2.0 * math.pi
_CUT = 0.1
_NEAR_CENTER = 1e-10
_INF_GAP = 1e-12

MODE_WEIGHTED = 0
MODE_UNIFORM = 1
MODE_NONWEIGHTED = 2

_TC = _TC_COEF.copy()
_QC = _Q_COEF.copy()
_NUPC = _NUP_COEF.copy()


@njit(cache=True)
def _horner(coef, x2):
    out = 0.0
    for i in range(coef.size - 1, -1, -1):
        out = out * x2 + coef[i]
    return out


@njit(cache=True)
def _sinc(x):
    if x == 0.0:
        return 1.0
    return math.sin(x) / x


@njit(cache=True)
def _tcoef(x):
    if abs(x) < _CUT:
        return x * _horner(_TC, x * x)
    return (x - math.sin(x)) / (x * x)


@njit(cache=True)
def _qfun(x):
    if abs(x) < _CUT:
        return _horner(_QC, x * x)
    return (math.sin(x) - x * math.cos(x)) / (x * x * x)


@njit(cache=True)
def _nu(th):
    h = _sinc(0.5 * th)
    return 2.0 * _tcoef(th) / (h * h)


@njit(cache=True)
def _nu_prime(th):
    if abs(th) < _CUT:
        return _horner(_NUPC, th * th)
    return 1.0 - _nu(th) / math.tan(0.5 * th)


@njit(cache=True)
def _nu_and_prime(th):
    if abs(th) < _CUT:
        return _nu(th), _horner(_NUPC, th * th)
    sh = math.sin(0.5 * th)
    ch = math.cos(0.5 * th)
    nu = (th - 2.0 * sh * ch) / (2.0 * sh * sh)
    return nu, 1.0 - nu * ch / sh


@njit(cache=True)
def _solve_nu(c):
    lo = 1e-12
    hi = _TWO_PI - 1e-12
    if c < 1.0:
        x = min(3.0 * c, 2.0)
    else:
        x = _TWO_PI - math.sqrt(4.0 * math.pi / c)
    x = min(max(x, lo), hi)
    for _ in range(100):
        nu, dnu = _nu_and_prime(x)
        f = nu - c
        if f < 0:
            lo = x
        elif f > 0:
            hi = x
        else:
            return x
        step = f / dnu
        if abs(step) <= 1e-13 * max(1.0, abs(x)):
            return min(max(x - step, lo), hi)
        new = x - step
        if not (new > lo and new < hi) or not math.isfinite(new):
            new = 0.5 * (lo + hi)
        if hi - lo <= 1e-13:
            return new
        x = new
    return x


@njit(cache=True)
def _efun(x):
    """Real and imaginary parts of i(e^{-ix} - 1)/x."""
    h = _sinc(0.5 * x)
    return _sinc(x), -0.5 * x * h * h


@njit(cache=True)
def log_midpoint(x0, x1, xt, y0, y1, yt, s):
    """Return (theta, z0, z1, zt) for the s-point of the geodesic from x to y in H^1."""
    a0 = y0 - x0
    a1 = y1 - x1
    # Im(zeta_x conj(zeta_y))
    cross = x1 * y0 - x0 * y1
    t = yt - xt - 2.0 * cross
    r2 = a0 * a0 + a1 * a1
    if r2 == 0.0 and t == 0.0:
        return 0.0, x0, x1, xt
    if r2 < _NEAR_CENTER * abs(t):
        th = _TWO_PI if t > 0 else -_TWO_PI
        c0 = math.sqrt(math.pi * abs(t))
        c1 = 0.0
    elif t == 0.0:
        th = 0.0
        c0 = a0
        c1 = a1
    else:
        th = _solve_nu(abs(t) / r2)
        if t < 0:
            th = -th
        e0, e1 = _efun(th)
        den = e0 * e0 + e1 * e1
        # chi = zeta / E
        c0 = (a0 * e0 + a1 * e1) / den
        c1 = (a1 * e0 - a0 * e1) / den
    phi = th * s
    e0, e1 = _efun(phi)
    g0 = s * (e0 * c0 - e1 * c1)
    g1 = s * (e0 * c1 + e1 * c0)
    gt = 2.0 * (c0 * c0 + c1 * c1) * s * s * _tcoef(phi)
    # z = x . g
    zt = xt + gt + 2.0 * (x1 * g0 - x0 * g1)
    return abs(th), x0 + g0, x1 + g1, zt


@njit(cache=True)
def tau_power(s, th):
    """tau_s^1(theta)^3; inf at theta >= 2pi - gap."""
    if th >= _TWO_PI - _INF_GAP:
        return math.inf
    a = 0.5 * th
    return s**5 * (_sinc(a * s) / _sinc(a)) * (_qfun(a * s) / _qfun(a))


@njit(cache=True)
def pmean(a, b, s, p):
    if a <= 0.0 or b <= 0.0:
        return 0.0
    if p == math.inf:
        return max(a, b)
    if p == -math.inf:
        return min(a, b)
    if p == 0.0:
        return a ** (1.0 - s) * b**s
    return ((1.0 - s) * a**p + s * b**p) ** (1.0 / p)


@njit(cache=True)
def midpoints_batch(X, Y, s):
    m = X.shape[0]
    out = np.empty((m, 3))
    th = np.empty(m)
    for i in range(m):
        t_, z0, z1, zt = log_midpoint(X[i, 0], X[i, 1], X[i, 2], Y[i, 0], Y[i, 1], Y[i, 2], s)
        th[i] = t_
        out[i, 0] = z0
        out[i, 1] = z1
        out[i, 2] = zt
    return th, out


@njit(cache=True)
def bbl_scan(X, fv, Y, gv, s, lo, cell, res, ps, modes, H, bounds):
    """Running max of the required p-mean per midpoint cell, for every (p, mode) combo.

    H has shape (combos, cells) and is updated in place; bounds (2, 3) collects the
    midpoint extent. Returns the number of midpoints outside the grid.
    """
    oob = 0
    nc = ps.size
    inv_u3 = 1.0 / (1.0 - s) ** 3
    inv_s3 = 1.0 / s**3
    inv_u2 = 1.0 / (1.0 - s) ** 2
    inv_s2 = 1.0 / s**2
    for i in range(X.shape[0]):
        f = fv[i]
        for j in range(Y.shape[0]):
            g = gv[j]
            th, z0, z1, zt = log_midpoint(X[i, 0], X[i, 1], X[i, 2], Y[j, 0], Y[j, 1], Y[j, 2], s)
            z = (z0, z1, zt)
            flat = 0
            inside = True
            for k in range(3):
                if z[k] < bounds[0, k]:
                    bounds[0, k] = z[k]
                if z[k] > bounds[1, k]:
                    bounds[1, k] = z[k]
                idx = int(math.floor((z[k] - lo[k]) / cell[k]))
                if idx == res[k] and z[k] <= lo[k] + res[k] * cell[k]:
                    idx = res[k] - 1
                if idx < 0 or idx >= res[k]:
                    inside = False
                flat = flat * res[k] + idx
            if not inside:
                oob += 1
                continue
            tw0 = tau_power(1.0 - s, th) * inv_u3
            tw1 = tau_power(s, th) * inv_s3
            for c in range(nc):
                mode = modes[c]
                if mode == 0:
                    a = f / tw0
                    b = g / tw1
                elif mode == 1:
                    a = f * inv_u2
                    b = g * inv_s2
                else:
                    a = f
                    b = g
                v = pmean(a, b, s, ps[c])
                if v > H[c, flat]:
                    H[c, flat] = v
    return oob


@njit(cache=True)
def midpoint_bounds(X, Y, s):
    """Coordinate-wise min and max of the s-midpoints over all pairs X x Y."""
    out = np.empty((2, 3))
    out[0, :] = np.inf
    out[1, :] = -np.inf
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            _, z0, z1, zt = log_midpoint(X[i, 0], X[i, 1], X[i, 2], Y[j, 0], Y[j, 1], Y[j, 2], s)
            z = (z0, z1, zt)
            for k in range(3):
                if z[k] < out[0, k]:
                    out[0, k] = z[k]
                if z[k] > out[1, k]:
                    out[1, k] = z[k]
    return out
