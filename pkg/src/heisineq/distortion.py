"""Heisenberg distortion coefficients tau_s^n, their rescaled versions and v_s.

Extended reals are plain floats: +inf is assigned explicitly on the branches
where the coefficient is infinite (theta = 2pi, center pairs) and never comes
from overflow. ``inf_times_zero`` implements the convention +inf * 0 = 0.
"""

from __future__ import annotations

import numpy as np

from heisineq._special import qfun, sinc
from heisineq.ccgeo import cc_log
from heisineq.hgroup import TWO_PI, HPoint, inv, mul

INF_GAP = 1e-12


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0) | (s >= 1)):
        raise ValueError("s must lie in (0, 1)")
    return s


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > TWO_PI)):
        raise ValueError("theta must lie in [0, 2pi]")
    return theta


def _tau_power(s, theta, n):
    """tau_s^n(theta)^(2n+1) (finite branch), i.e. Jac(Gamma_s)/Jac(Gamma_1)."""
    a1 = 0.5 * theta
    a_s = a1 * s
    r1 = sinc(a_s) / sinc(a1)
    r2 = qfun(a_s) / qfun(a1)
    return s ** (2 * n + 3) * r1 ** (2 * n - 1) * r2


def tau(s, theta, n: int = 1):
    """tau_s^n(theta) for s in (0,1), theta in [0, 2pi]; +inf at theta = 2pi."""
    s = _check_s(s)
    theta = _check_theta(theta)
    s, theta = np.broadcast_arrays(s, theta)
    infinite = theta >= TWO_PI - INF_GAP
    th = np.where(infinite, 0.0, theta)
    out = _tau_power(s, th, n) ** (1.0 / (2 * n + 1))
    out = np.where(infinite, np.inf, out)
    return out[()] if out.ndim == 0 else out


def tau_tilde(s, theta, n: int = 1):
    return tau(s, theta, n) / np.asarray(s, dtype=float)


def tau_hat(s, theta, n: int = 1, moving=True):
    """Transport-based coefficient: tau on moving points, s on static ones."""
    s = _check_s(s)
    val = tau(s, theta, n)
    return np.where(moving, val, s)[()]


def tau_hat_tilde(s, theta, n: int = 1, moving=True):
    s = _check_s(s)
    return np.where(moving, tau_tilde(s, theta, n), 1.0)[()]


def v_from_theta(s, theta, n: int = 1):
    """v_s as a function of the angle: s^-(2n+2) tau_s^n(theta)^(2n+1)."""
    s = _check_s(s)
    theta = _check_theta(theta)
    s, theta = np.broadcast_arrays(s, theta)
    infinite = theta >= TWO_PI - INF_GAP
    th = np.where(infinite, 0.0, theta)
    out = _tau_power(s, th, n) / s ** (2 * n + 2)
    out = np.where(infinite, np.inf, out)
    return out[()] if out.ndim == 0 else out


def v_heis(s, x: HPoint, y: HPoint):
    """Volume distortion v_s(x, y), x != y; +inf when x^{-1} y is on the center."""
    log = cc_log(mul(inv(x), y))
    if np.any(log.at_origin):
        raise ValueError("v_s(x, y) is defined only for x != y")
    theta = np.abs(log.param.theta)
    theta = np.where(log.on_center, TWO_PI, theta)
    return v_from_theta(s, theta, x.n)


def v0(s, x: HPoint, y: HPoint):
    """s v_s(x, y) off the diagonal, s^2 on it."""
    s = _check_s(s)
    log = cc_log(mul(inv(x), y))
    theta = np.where(log.on_center, TWO_PI, np.abs(log.param.theta))
    val = s * v_from_theta(s, theta, x.n)
    return np.where(log.at_origin, s * s, val)[()]


def inf_times_zero(coef, vol):
    """coef * vol with +inf * 0 = 0."""
    coef = np.asarray(coef, dtype=float)
    vol = np.asarray(vol, dtype=float)
    return np.where(vol == 0, 0.0, coef * np.where(vol == 0, 1.0, vol))[()]

