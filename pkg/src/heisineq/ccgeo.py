"""Inverse of the sub-Riemannian exponential Gamma_1 and the CC geometry built on it.

For g = (zeta, t) off the center, Gamma_1(chi, theta) = g reduces to the scalar
equation nu(theta) = t / |zeta|^2 with nu(theta) = (theta - sin theta)/(1 - cos theta),
strictly increasing on (-2pi, 2pi). Then chi = zeta / E(theta) with
E(theta) = i(e^{-i theta} - 1)/theta, and the CC distance to the origin is |chi|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heisineq._special import bracketed_newton, efun, nu, nu_prime
from heisineq.hgroup import TWO_PI, GeodesicParam, HPoint, gamma, inv, mul, norm2

NEAR_CENTER = 1e-10
ROOT_TOL = 1e-13
MAX_ITER = 100


class NonConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LogResult:
    param: GeodesicParam
    on_center: np.ndarray
    at_origin: np.ndarray
    unique: np.ndarray
    residual: np.ndarray

    def __getitem__(self, idx) -> "LogResult":
        return LogResult(self.param[idx], self.on_center[idx], self.at_origin[idx],
                         self.unique[idx], self.residual[idx])


def solve_nu(target):
    """Solve nu(theta) = target for theta in (0, 2pi), target > 0 (vectorized)."""
    c = np.asarray(target, dtype=float).ravel()
    # small-angle guess theta ~ 3c, near-2pi guess 2pi - sqrt(4pi/c)
    x0 = np.where(c < 1.0, np.minimum(3.0 * c, 2.0), TWO_PI - np.sqrt(4 * np.pi / np.maximum(c, 1.0)))
    theta, ok = bracketed_newton(
        lambda th, i: nu(th) - c[i],
        lambda th, i: nu_prime(th),
        np.full(c.shape, 1e-12), np.full(c.shape, TWO_PI - 1e-12), x0,
        tol=ROOT_TOL, max_iter=MAX_ITER,
    )
    if not ok.all():
        raise NonConvergenceError(f"nu root solve did not converge for {(~ok).sum()} inputs")
    return theta.reshape(np.shape(target))


def cc_log(g: HPoint) -> LogResult:
    """Parameters (chi, theta) with Gamma_1(chi, theta) = g, plus cut-locus flags.

    Center points (0, t) get the representative chi = sqrt(pi|t|) e_1,
    theta = sign(t) 2pi and ``unique=False``; so do points within the
    near-center tube |zeta|^2 < 1e-10 |t|.
    """
    zeta, t = g.zeta, g.t
    r2 = norm2(zeta)
    at_origin = (r2 == 0) & (t == 0)
    on_center = ~at_origin & (r2 < NEAR_CENTER * np.abs(t))
    regular = ~at_origin & ~on_center

    theta = np.zeros(t.shape)
    chi = np.array(zeta, dtype=complex, copy=True)

    vert = regular & (t != 0)
    if np.any(vert):
        c = np.abs(t[vert]) / r2[vert]
        theta[vert] = np.sign(t[vert]) * solve_nu(c)
        chi[vert] = zeta[vert] / efun(theta[vert])[..., None]

    if np.any(on_center):
        chi[on_center] = 0.0
        chi[on_center, 0] = np.sqrt(np.pi * np.abs(t[on_center]))
        theta[on_center] = np.sign(t[on_center]) * TWO_PI
    chi[at_origin] = 0.0

    param = GeodesicParam(chi, theta)
    back = gamma(1.0, param)
    residual = np.maximum(np.max(np.abs(back.zeta - zeta), axis=-1, initial=0.0), np.abs(back.t - t))
    return LogResult(param, on_center, at_origin, regular.copy(), residual)


def cc_norm(g: HPoint):
    """d_CC(0, g)."""
    return np.sqrt(norm2(cc_log(g).param.chi))


def cc_dist(x: HPoint, y: HPoint):
    return cc_norm(mul(inv(x), y))


def theta_angle(x: HPoint, y: HPoint):
    """|theta| of Gamma_1^{-1}(x^{-1} y); 0 when x = y and 2pi on the center."""
    return np.abs(cc_log(mul(inv(x), y)).param.theta)


def midpoint(x: HPoint, y: HPoint, s) -> HPoint:
    """The s-intermediate point x . Gamma_s(Gamma_1^{-1}(x^{-1} y)).

    On the cut locus the canonical (chi along e_1) representative is used; callers
    that care inspect ``midpoint_with_flags``.
    """
    return midpoint_with_flags(x, y, s)[0]


def midpoint_with_flags(x: HPoint, y: HPoint, s):
    log = cc_log(mul(inv(x), y))
    z = mul(x, gamma(s, log.param))
    return z, log.unique | log.at_origin


def extend(x: HPoint, z: HPoint, s):
    """Inverse of y -> midpoint(x, y, s) for fixed x.

    Returns (y, ok) where ok is False when the geodesic from x through z cannot be
    prolonged to a minimizing one of 1/s times the length (|theta| / s > 2pi).
    """
    log = cc_log(mul(inv(x), z))
    th = log.param.theta / s
    ok = (np.abs(th) < TWO_PI) & ~log.on_center
    th = np.where(ok, th, 0.0)
    y = mul(x, gamma(1.0, GeodesicParam(log.param.chi / s, th)))
    return y, ok


def cc_ball_volume(r: float, n: int = 1) -> float:
    """L^{2n+1}(B_CC(0, r)) by integrating Jac(Gamma_1) over |chi| <= r, |theta| <= 2pi.

    Gamma_1 is a diffeomorphism off the center, so the volume is
    r^{2n+2} |S^{2n-1}| / (2n+2) * int_{-2pi}^{2pi} sinc(theta/2)^{2n-1} q(theta/2) dtheta.
    """
    from math import factorial

    from scipy.integrate import quad

    from heisineq._special import qfun, sinc

    sphere = 2.0 * np.pi**n / factorial(n - 1)
    radial = sphere / (2 * n + 2)
    ang, _ = quad(lambda th: float(sinc(0.5 * th) ** (2 * n - 1) * qfun(0.5 * th)), 0.0, TWO_PI,
                  epsabs=1e-14, epsrel=1e-13)
    return float(r ** (2 * n + 2) * radial * 2.0 * ang)
