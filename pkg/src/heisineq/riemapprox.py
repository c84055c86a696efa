"""Riemannian approximations M^eps of H^n: eps-geodesics and their volume distortion.

M^eps makes {X_j, Y_j, eps T} orthonormal. From the origin, the eps-geodesic with
data (chi, theta, eps) is

    gamma^eps(s) = ( i (e^{-i theta s} - 1)/theta chi,
                     (eps^2/4) theta s + 2|chi|^2 (theta s - sin theta s)/theta^2 ),

and its (constant) speed is |w| = sqrt(|chi|^2 + (eps theta / 4)^2).

The true d^eps needs a Riemannian boundary value solver; here the length of the
shooting solution with minimal |theta| is used as a proxy. It is an upper bound
for d^eps, and the distance reports say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from heisineq._special import bracketed_newton, efun, nu, nu_prime, qfun, sinc, tcoef
from heisineq.ccgeo import NEAR_CENTER, NonConvergenceError, cc_dist
from heisineq.hgroup import TWO_PI, GeodesicParam, HPoint, inv, jac_gamma, mul, norm2

PROXY_CAVEAT = ("d_eps is represented by the length of the minimal-|theta| shooting "
                "solution, an upper bound for the Riemannian distance")


@dataclass(frozen=True, eq=False)
class EpsParam:
    chi_eps: np.ndarray
    theta_eps: np.ndarray
    eps: float
    residual: np.ndarray | None = None

    def __post_init__(self):
        chi = np.asarray(self.chi_eps, dtype=complex)
        if chi.ndim == 0:
            chi = chi.reshape(1)
        theta = np.asarray(self.theta_eps, dtype=float)
        if chi.shape[:-1] != theta.shape:
            raise ValueError("chi_eps batch shape does not match theta_eps")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_eps must be finite")
        object.__setattr__(self, "chi_eps", chi)
        object.__setattr__(self, "theta_eps", theta)

    @property
    def n(self) -> int:
        return self.chi_eps.shape[-1]

    @property
    def within_2pi(self):
        """False marks solutions that may not be minimizing (|theta| > 2pi)."""
        return np.abs(self.theta_eps) <= TWO_PI

    @classmethod
    def from_initial_vector(cls, w, eps: float) -> "EpsParam":
        """From coordinates w = (w_1..w_n, w_{n+1}..w_{2n}, w_{2n+1}) in the orthonormal frame."""
        w = np.asarray(w, dtype=float)
        n = (w.shape[-1] - 1) // 2
        chi = w[..., :n] + 1j * w[..., n:2 * n]
        return cls(chi, 4.0 * w[..., 2 * n] / eps, eps)


def gamma_eps(s, p: EpsParam) -> HPoint:
    s = np.asarray(s, dtype=float)
    phi = p.theta_eps * s
    zeta = (s * efun(phi))[..., None] * p.chi_eps
    t = 0.25 * p.eps**2 * phi + 2.0 * norm2(p.chi_eps) * s * s * tcoef(phi)
    return HPoint(zeta, t)


def jac_gamma_eps_parts(s, p: EpsParam):
    """(A_s, B_s): the eps-free part and the eps^2 part of Jac(Gamma_s^eps)."""
    s = np.asarray(s, dtype=float)
    n = p.n
    a = 0.5 * p.theta_eps * s
    sa = sinc(a)
    A = s ** (2 * n + 3) * norm2(p.chi_eps) * sa ** (2 * n - 1) * qfun(a)
    B = 0.25 * p.eps**2 * s ** (2 * n + 1) * sa ** (2 * n)
    return A, B


def jac_gamma_eps(s, p: EpsParam):
    A, B = jac_gamma_eps_parts(s, p)
    return A + B


def v_eps(s, p: EpsParam):
    """v_s^eps(x, y) = s^-(2n+1) Jac(Gamma_s^eps) / Jac(Gamma_1^eps)."""
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0) | (s >= 1)):
        raise ValueError("s must lie in (0, 1)")
    return jac_gamma_eps(s, p) / (s ** (2 * p.n + 1) * jac_gamma_eps(1.0, p))


def v_eps_companion(s, p: EpsParam):
    """v_{1-s}^eps(y, x), evaluated at the same parameters as v_s^eps(x, y)."""
    return v_eps(1.0 - np.asarray(s, dtype=float), p)


def reversed_param(p: EpsParam) -> EpsParam:
    """Parameters of the reversed eps-geodesic from y back to x."""
    return EpsParam(-p.chi_eps * np.exp(-1j * p.theta_eps)[..., None], -p.theta_eps, p.eps)


def eps_length(p: EpsParam):
    return np.sqrt(norm2(p.chi_eps) + (0.25 * p.eps * p.theta_eps) ** 2)


def eps_log(g: HPoint, eps: float) -> EpsParam:
    """Shooting inverse of Gamma_1^eps, choosing the solution with minimal |theta|.

    Off the center, |zeta|^2 nu(theta) + (eps^2/4) theta = t has exactly one root
    in (-2pi, 2pi). On the center either the vertical segment (theta = 4t/eps^2,
    when that is <= 2pi) or the theta = 2pi circle family solves the system.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    zeta, t = g.zeta, g.t
    if np.any((norm2(zeta) == 0) & (t == 0)):
        raise ValueError("eps_log is undefined at the origin")
    r2 = norm2(zeta)
    e2 = 0.25 * eps * eps
    center = r2 < NEAR_CENTER * np.abs(t)
    regular = ~center & (t != 0)

    theta = np.zeros(t.shape)
    chi = np.array(zeta, dtype=complex, copy=True)

    if np.any(regular):
        c_t = np.abs(t[regular])
        c_r = r2[regular]
        cap = TWO_PI - 1e-12
        x0 = np.minimum(c_t / (e2 + c_r / 3.0), 0.5 * cap)
        root, ok = bracketed_newton(
            lambda th, i: e2 * th + c_r[i] * nu(th) - c_t[i],
            lambda th, i: e2 + c_r[i] * nu_prime(th),
            np.zeros(c_t.shape), np.full(c_t.shape, cap), x0,
        )
        if not ok.all():
            raise NonConvergenceError(f"eps_log: {(~ok).sum()} roots did not converge (eps={eps})")
        theta[regular] = np.sign(t[regular]) * root
        chi[regular] = zeta[regular] / efun(theta[regular])[..., None]

    if np.any(center):
        tc = t[center]
        vertical = np.abs(tc) <= e2 * TWO_PI
        th = np.where(vertical, tc / e2, np.sign(tc) * TWO_PI)
        mod = np.sqrt(np.where(vertical, 0.0, np.pi * (np.abs(tc) - e2 * TWO_PI)))
        c = np.zeros_like(chi[center])
        c[..., 0] = mod
        chi[center] = c
        theta[center] = th

    p = EpsParam(chi, theta, eps)
    back = gamma_eps(1.0, p)
    residual = np.maximum(np.max(np.abs(back.zeta - zeta), axis=-1), np.abs(back.t - t))
    return EpsParam(chi, theta, eps, residual)


def fit_order(eps_values, errors) -> float:
    """Least-squares slope of log(error) against log(eps); inf when errors vanish."""
    e = np.asarray(eps_values, dtype=float)
    err = np.asarray(errors, dtype=float)
    mask = err > 0
    if mask.sum() < 2:
        return float("inf")
    return float(np.polyfit(np.log(e[mask]), np.log(err[mask]), 1)[0])


@dataclass
class ConvergenceReport:
    eps_values: list
    errors: list
    fitted_order: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.eps_values) != len(self.errors) or len(self.eps_values) < 3:
            raise ValueError("a convergence report needs >= 3 (eps, error) pairs of equal length")

    def to_json(self) -> dict:
        out = {"eps": list(map(float, self.eps_values)),
               "error": list(map(float, self.errors)),
               "fitted_order": self.fitted_order}
        out.update(self.extra)
        return out


def sandwich_check(x: HPoint, y: HPoint, eps_list, tol: float = 1e-9) -> ConvergenceReport:
    """Check proxy(d_eps) <= d_CC and estimate c in d_CC - c pi eps <= d_eps."""
    g = mul(inv(x), y)
    if np.any((norm2(g.zeta) == 0) & (g.t == 0)):
        raise ValueError("sandwich_check needs x != y")
    d_cc = np.asarray(cc_dist(x, y), dtype=float)
    eps_list = [float(e) for e in eps_list]
    proxies, gaps = [], []
    for eps in eps_list:
        proxy = eps_length(eps_log(g, eps))
        proxies.append(proxy)
        gaps.append(d_cc - proxy)
    gaps = np.array(gaps)
    errors = np.max(np.abs(gaps), axis=tuple(range(1, gaps.ndim))) if gaps.ndim > 1 else np.abs(gaps)
    upper_ok = bool(np.all(gaps >= -tol))
    c_est = float(np.max(gaps / (np.pi * np.reshape(eps_list, (-1,) + (1,) * (gaps.ndim - 1)))))
    return ConvergenceReport(
        eps_list, errors.tolist(), fit_order(eps_list, errors),
        extra={"d_cc": np.asarray(d_cc).tolist(), "proxy": np.asarray(proxies).tolist(),
               "upper_bound_holds": upper_ok, "c_est": max(c_est, 0.0), "caveat": PROXY_CAVEAT},
    )


def bridge_limit(s, chi, theta, n: int | None = None):
    """Limit of v_s^eps at fixed (chi, theta): s^-(2n+1) Jac(Gamma_s)/Jac(Gamma_1) = v_s^0."""
    p = GeodesicParam(chi, theta)
    n = p.n if n is None else n
    return jac_gamma(s, p) / (s ** (2 * n + 1) * jac_gamma(1.0, p))


def bridge_limit_check(s, chi, theta, eps_list) -> ConvergenceReport:
    chi = np.asarray(chi, dtype=complex)
    if np.all(chi == 0):
        raise ValueError("bridge_limit_check needs chi != 0")
    if abs(theta) >= TWO_PI:
        raise ValueError("bridge_limit_check needs |theta| < 2pi")
    limit = float(bridge_limit(s, chi, theta))
    values = [float(v_eps(s, EpsParam(chi, theta, e))) for e in eps_list]
    errors = [abs(v - limit) for v in values]
    return ConvergenceReport(
        list(map(float, eps_list)), errors, fit_order(eps_list, errors),
        extra={"limit": limit, "values": values, "limit_ge_s2": limit >= s * s * (1 - 1e-12)},
    )
