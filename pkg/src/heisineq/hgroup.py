"""Heisenberg group H^n in complex coordinates (zeta, t) in C^n x R.

Points and geodesic parameters are stored as (possibly batched) numpy arrays:
``zeta`` has shape ``(..., n)`` and ``t`` has shape ``(...)``. Every operation
broadcasts over the leading batch axes, so one call handles a whole cloud.

Group law::

    (zeta, t) . (zeta', t') = (zeta + zeta', t + t' + 2 Im <zeta, zeta'>)

with the Hermitian product <zeta, zeta'> = sum zeta_j conj(zeta'_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heisineq._special import efun, qfun, sinc, tcoef

TWO_PI = 2.0 * np.pi


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GroupContext:
    n: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")

    @property
    def topological_dim(self) -> int:
        return 2 * self.n + 1

    @property
    def homogeneous_dim(self) -> int:
        return 2 * self.n + 2


@dataclass(frozen=True, eq=False)
class HPoint:
    """A point, or a batch of points, of H^n."""

    zeta: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=complex)
        if zeta.ndim == 0:
            zeta = zeta.reshape(1)
        t = np.asarray(self.t, dtype=float)
        if zeta.shape[:-1] != t.shape:
            raise DimensionError(f"zeta batch shape {zeta.shape[:-1]} != t shape {t.shape}")
        if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(t))):
            raise ValueError("HPoint components must be finite")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.zeta.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.t.shape

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, idx) -> "HPoint":
        return HPoint(self.zeta[idx], self.t[idx])

    def __repr__(self) -> str:
        if self.t.ndim == 0:
            return f"HPoint(zeta={self.zeta.tolist()}, t={float(self.t)!r})"
        return f"HPoint(<batch {self.shape}>, n={self.n})"

    @classmethod
    def origin(cls, n: int = 1) -> "HPoint":
        return cls(np.zeros(n, dtype=complex), 0.0)

    @classmethod
    def from_real(cls, coords) -> "HPoint":
        """Build from interleaved reals [re z1, im z1, ..., re zn, im zn, t]."""
        a = np.asarray(coords, dtype=float)
        if a.shape[-1] % 2 != 1 or a.shape[-1] < 3:
            raise DimensionError(f"expected 2n+1 real coordinates, got {a.shape[-1]}")
        zeta = a[..., :-1:2] + 1j * a[..., 1:-1:2]
        return cls(zeta, a[..., -1])

    def to_real(self) -> np.ndarray:
        out = np.empty(self.shape + (2 * self.n + 1,))
        out[..., :-1:2] = self.zeta.real
        out[..., 1:-1:2] = self.zeta.imag
        out[..., -1] = self.t
        return out

    def to_list(self) -> list:
        return self.to_real().tolist()

    @classmethod
    def stack(cls, points) -> "HPoint":
        points = list(points)
        return cls(np.stack([p.zeta for p in points]), np.stack([p.t for p in points]))

    @classmethod
    def concat(cls, points) -> "HPoint":
        """Join 1-d batches end to end."""
        points = list(points)
        return cls(np.concatenate([p.zeta for p in points]), np.concatenate([p.t for p in points]))


@dataclass(frozen=True, eq=False)
class GeodesicParam:
    """Initial data (chi, theta) of the geodesic s -> gamma_{chi,theta}(s) from 0."""

    chi: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=complex)
        if chi.ndim == 0:
            chi = chi.reshape(1)
        theta = np.asarray(self.theta, dtype=float)
        if chi.shape[:-1] != theta.shape:
            raise DimensionError("chi batch shape does not match theta")
        if np.any(np.abs(theta) > TWO_PI * (1 + 1e-14)):
            raise ValueError("theta must lie in [-2pi, 2pi]")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.chi.shape[-1]

    @property
    def degenerate(self):
        """chi = 0 with theta != 0: the curve is constant."""
        return (norm2(self.chi) == 0) & (self.theta != 0)

    def __getitem__(self, idx) -> "GeodesicParam":
        return GeodesicParam(self.chi[idx], self.theta[idx])


def norm2(z: np.ndarray) -> np.ndarray:
    """Squared Hermitian norm over the last axis."""
    return np.sum(z.real**2 + z.imag**2, axis=-1)


def _check_same_n(x: HPoint, y: HPoint):
    if x.n != y.n:
        raise DimensionError(f"dimension mismatch: n={x.n} vs n={y.n}")


def mul(x: HPoint, y: HPoint) -> HPoint:
    _check_same_n(x, y)
    # Im <zeta, zeta'> in real arithmetic so that x^-1 x is exactly the identity
    cross = np.sum(x.zeta.imag * y.zeta.real - x.zeta.real * y.zeta.imag, axis=-1)
    return HPoint(x.zeta + y.zeta, x.t + y.t + 2.0 * cross)


def inv(x: HPoint) -> HPoint:
    return HPoint(-x.zeta, -x.t)


def dilate(lam: float, x: HPoint) -> HPoint:
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return HPoint(lam * x.zeta, lam * lam * x.t)


def left_translate_real(x: HPoint, coords: np.ndarray) -> np.ndarray:
    """y -> x.y acting on interleaved real coordinates (used by numerical Jacobians)."""
    return mul(x, HPoint.from_real(coords)).to_real()


def gamma(s, p: GeodesicParam) -> HPoint:
    """Point gamma_{chi,theta}(s) of the geodesic from the origin.

    Uses Gamma_s(chi, theta) = Gamma_1(s chi, s theta); the kernels are
    series-evaluated near theta*s = 0 so the theta = 0 branch (s chi, 0) is the
    continuous limit.
    """
    s = np.asarray(s, dtype=float)
    phi = p.theta * s
    zeta = (s * efun(phi))[..., None] * p.chi
    t = 2.0 * norm2(p.chi) * s * s * tcoef(phi)
    return HPoint(zeta, t)


def jac_gamma(s, p: GeodesicParam):
    """Jacobian determinant of (chi, theta) -> Gamma_s(chi, theta).

    Written as s^(2n+3) |chi|^2 sinc(a)^(2n-1) q(a) with a = theta s / 2, which
    equals the closed form and is smooth through theta = 0.
    """
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(p.theta) >= TWO_PI):
        raise ValueError("|theta| = 2pi is outside the diffeomorphism domain of Gamma_s")
    if np.any((s <= 0) | (s > 1)):
        raise ValueError("s must lie in (0, 1]")
    n = p.n
    a = 0.5 * p.theta * s
    return s ** (2 * n + 3) * norm2(p.chi) * sinc(a) ** (2 * n - 1) * qfun(a)


def koranyi_gauge(x: HPoint):
    return (norm2(x.zeta) ** 2 + x.t**2) ** 0.25


def koranyi_dist(x: HPoint, y: HPoint):
    return koranyi_gauge(mul(inv(x), y))
