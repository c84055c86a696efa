"""Discrete optimal transport on H^n for the cost d_CC^2 / 2, displacement
interpolation and the transport-based inequality checks.

A sample of size m from a density becomes a uniform Cloud; the exact plan between
two such clouds is a permutation, so the interpolant is the cloud of geodesic
midpoints. Densities of the interpolant are estimated on voxel grids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import erf, sqrt
from typing import Any

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.special import logsumexp
from scipy.stats import poisson

from heisineq._sampling import box_real, cc_ball_real, stream, translate
from heisineq.ccgeo import NonConvergenceError, cc_ball_volume, cc_dist, cc_log, midpoint
from heisineq.distortion import tau, tau_tilde
from heisineq.hgroup import TWO_PI, HPoint, inv, mul

EXACT_CAP = 512
STATIC_REL = 1e-9
MARGIN = 0.1
DEFAULT_RES = 24
CELL_ALPHA = 1e-3


def _cell_excess(count, lam, occupied):
    """Cells whose count is implausibly large under Poisson(lam).

    Family-wise level CELL_ALPHA over the occupied cells (Bonferroni), so that
    equality cases with many sparse cells do not trip on chance alone.
    """
    m = max(int(occupied.sum()), 1)
    pval = poisson.sf(count - 1, np.maximum(lam, 0.0))
    return occupied & (pval < CELL_ALPHA / m)


# ---------------------------------------------------------------- reports

@dataclass
class VerifyReport:
    check: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool
    seed: int | None = None
    samples: int | None = None
    grid: Any = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"check": self.check, "lhs": _plain(self.lhs), "rhs": _plain(self.rhs),
               "margin": _plain(self.margin), "tolerance": _plain(self.tolerance),
               "pass": bool(self.passed), "seed": self.seed, "samples": self.samples,
               "grid": _plain(self.grid)}
        out.update({k: _plain(v) for k, v in self.extra.items()})
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, allow_nan=True)


def _plain(v):
    """Numpy scalars/arrays -> JSON-friendly python objects."""
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


# ----------------------------------------------------------- clouds, plans

@dataclass(frozen=True, eq=False)
class Cloud:
    points: HPoint
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if self.points.t.ndim != 1 or len(self.points) != w.size:
            raise ValueError("a Cloud needs a 1-d batch of points and one weight per point")
        if np.any(w <= 0):
            raise ValueError("cloud weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"cloud weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points: HPoint) -> "Cloud":
        m = len(points)
        return cls(points, np.full(m, 1.0 / m))

    def __len__(self) -> int:
        return self.weights.size

    @property
    def n(self) -> int:
        return self.points.n

    def to_jsonl(self) -> str:
        rows = self.points.to_real()
        return "\n".join(json.dumps({"x": r.tolist(), "w": float(w)}) for r, w in zip(rows, self.weights))

    @classmethod
    def from_jsonl(cls, text: str) -> "Cloud":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(HPoint.from_real([r["x"] for r in rows]), np.array([r["w"] for r in rows]))


@dataclass(frozen=True, eq=False)
class Plan:
    src: np.ndarray
    dst: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        mass = np.asarray(self.mass, dtype=float)
        if not (src.shape == dst.shape == mass.shape) or src.ndim != 1:
            raise ValueError("plan arrays must be 1-d and of equal length")
        if np.any(mass <= 0):
            raise ValueError("plan masses must be positive")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "mass", mass)

    def __len__(self) -> int:
        return self.mass.size

    def marginals(self, m: int, k: int):
        return (np.bincount(self.src, self.mass, minlength=m), np.bincount(self.dst, self.mass, minlength=k))

    def check(self, a: Cloud, b: Cloud, tol: float = 1e-9) -> None:
        r, c = self.marginals(len(a), len(b))
        err = max(np.abs(r - a.weights).max(), np.abs(c - b.weights).max())
        if err > tol:
            raise ValueError(f"plan marginals off by {err:.3g}")

    def cost(self, a: Cloud, b: Cloud) -> float:
        d = cc_dist(a.points[self.src], b.points[self.dst])
        return float(np.sum(self.mass * 0.5 * d * d))

    def split_fraction(self) -> float:
        """Mass share of source points whose mass is split over several targets."""
        counts = np.bincount(self.src)
        return float(self.mass[counts[self.src] > 1].sum())

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps({"i": int(i), "j": int(j), "m": float(m)})
                         for i, j, m in zip(self.src, self.dst, self.mass))

    @classmethod
    def from_jsonl(cls, text: str) -> "Plan":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls([r["i"] for r in rows], [r["j"] for r in rows], [r["m"] for r in rows])


def cost_matrix(a: Cloud, b: Cloud, chunk: int = 65536) -> np.ndarray:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")
    m, k = len(a), len(b)
    ii, jj = np.divmod(np.arange(m * k), k)
    out = np.empty(m * k)
    for lo in range(0, m * k, chunk):
        sl = slice(lo, lo + chunk)
        d = cc_dist(a.points[ii[sl]], b.points[jj[sl]])
        out[sl] = 0.5 * d * d
    return out.reshape(m, k)


def solve_exact(a: Cloud, b: Cloud, cap: int = EXACT_CAP, cost: np.ndarray | None = None) -> Plan:
    """Exact Kantorovich solution.

    Equal-size uniform clouds reduce to linear assignment (scipy's Jonker-Volgenant);
    general weights go through the transportation LP with HiGHS.
    """
    m, k = len(a), len(b)
    if max(m, k) > cap:
        raise ValueError(f"exact solver capped at {cap} points per side, got {m}x{k}")
    C = cost_matrix(a, b) if cost is None else cost
    if m == k and np.allclose(a.weights, 1.0 / m, rtol=0, atol=1e-15) \
            and np.allclose(b.weights, 1.0 / k, rtol=0, atol=1e-15):
        rows, cols = linear_sum_assignment(C)
        return Plan(rows, cols, np.full(m, 1.0 / m))
    A_eq = np.zeros((m + k, m * k))
    for i in range(m):
        A_eq[i, i * k:(i + 1) * k] = 1.0
    for j in range(k):
        A_eq[m + j, j::k] = 1.0
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.r_[a.weights, b.weights], bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise NonConvergenceError(f"transport LP failed: {res.message}")
    x = res.x.reshape(m, k)
    ii, jj = np.nonzero(x > 1e-15)
    plan = Plan(ii, jj, x[ii, jj])
    plan.check(a, b)
    return plan


def solve_entropic(a: Cloud, b: Cloud, reg: float, tol: float = 1e-8, max_iter: int = 200000,
                   cost: np.ndarray | None = None) -> Plan:
    """Log-domain Sinkhorn for min <C, P> - reg H(P); marginal error <= tol."""
    if not reg > 0:
        raise ValueError("reg must be positive")
    C = cost_matrix(a, b) if cost is None else cost
    la, lb = np.log(a.weights), np.log(b.weights)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    M = -C / reg
    for it in range(max_iter):
        f = la - logsumexp(M + g[None, :], axis=1)
        g = lb - logsumexp(M + f[:, None], axis=0)
        if it % 10 == 0 or it == max_iter - 1:
            P = np.exp(M + f[:, None] + g[None, :])
            if np.abs(P.sum(axis=1) - a.weights).max() <= tol:
                break
    else:
        raise NonConvergenceError(f"Sinkhorn did not reach tol={tol} in {max_iter} iterations (reg={reg})")
    P = np.exp(M + f[:, None] + g[None, :])
    ii, jj = np.nonzero(P > 0)
    return Plan(ii, jj, P[ii, jj])


def pair_geometry(plan: Plan, a: Cloud, b: Cloud):
    """(theta, d, static) for every plan entry."""
    x, y = a.points[plan.src], b.points[plan.dst]
    log = cc_log(mul(inv(x), y))
    d = np.sqrt(np.sum(np.abs(log.param.chi) ** 2, axis=-1))
    theta = np.where(log.on_center, TWO_PI, np.abs(log.param.theta))
    scale = max(float(d.max()) if d.size else 0.0, 1e-300)
    static = d < STATIC_REL * scale
    return np.where(static, 0.0, theta), d, static


def interpolate(plan: Plan, a: Cloud, b: Cloud, s: float) -> Cloud:
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    x, y = a.points[plan.src], b.points[plan.dst]
    z = midpoint(x, y, s)
    _, _, static = pair_geometry(plan, a, b)
    z = HPoint(np.where(static[:, None], x.zeta, z.zeta), np.where(static, x.t, z.t))
    return Cloud(z, plan.mass / plan.mass.sum())


# ------------------------------------------------------------- densities

DENSITY_KINDS = ("uniform-box", "uniform-cc-ball", "product-gaussian-truncated")


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """Probability density on H^n, described in coordinates left-translated by ``center``.

    uniform-box: uniform on center . prod [-h_k, h_k];
    uniform-cc-ball: uniform on B_CC(center, radius);
    product-gaussian-truncated: prod exp(-w_k^2 / 2 sigma_k^2) on center . prod [-h_k, h_k].
    Left translations have unit Jacobian, so normalizations are those of the model set.
    """

    kind: str
    center: HPoint
    half_widths: tuple = ()
    radius: float = 0.0
    sigma: tuple = ()

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        dim = 2 * self.center.n + 1
        if self.kind == "uniform-cc-ball":
            if not self.radius > 0:
                raise ValueError("radius must be positive")
        else:
            h = np.asarray(self.half_widths, dtype=float)
            if h.shape != (dim,) or np.any(h <= 0):
                raise ValueError(f"need {dim} positive half-widths")
            object.__setattr__(self, "half_widths", tuple(h.tolist()))
        if self.kind == "product-gaussian-truncated":
            sg = np.asarray(self.sigma, dtype=float)
            if sg.shape != (dim,) or np.any(sg <= 0):
                raise ValueError(f"need {dim} positive sigmas")
            object.__setattr__(self, "sigma", tuple(sg.tolist()))

    @property
    def n(self) -> int:
        return self.center.n

    def same_as(self, other) -> bool:
        return (isinstance(other, DensitySpec) and self.kind == other.kind
                and np.array_equal(self.center.to_real(), other.center.to_real())
                and self.half_widths == other.half_widths and self.radius == other.radius
                and self.sigma == other.sigma)

    @property
    def support_volume(self) -> float:
        if self.kind == "uniform-cc-ball":
            return cc_ball_volume(self.radius, self.n)
        return float(np.prod(2.0 * np.asarray(self.half_widths)))

    @property
    def normalization(self) -> float:
        """Integral of the unnormalized profile (1 on the support for uniform kinds)."""
        if self.kind != "product-gaussian-truncated":
            return self.support_volume
        z = 1.0
        for h, sg in zip(self.half_widths, self.sigma):
            z *= sg * sqrt(2 * np.pi) * erf(h / (sg * sqrt(2)))
        return z

    def _local(self, x: HPoint) -> np.ndarray:
        return mul(inv(self.center), x).to_real()

    def contains(self, x: HPoint):
        w = self._local(x)
        if self.kind == "uniform-cc-ball":
            from heisineq.ccgeo import cc_norm
            return cc_norm(HPoint.from_real(w)) <= self.radius
        return np.all(np.abs(w) <= np.asarray(self.half_widths), axis=-1)

    def pdf(self, x: HPoint):
        inside = self.contains(x)
        if self.kind != "product-gaussian-truncated":
            return np.where(inside, 1.0 / self.support_volume, 0.0)
        w = self._local(x)
        prof = np.exp(-0.5 * np.sum((w / np.asarray(self.sigma)) ** 2, axis=-1))
        return np.where(inside, prof / self.normalization, 0.0)

    def sample(self, rng: np.random.Generator, m: int) -> HPoint:
        if self.kind == "uniform-cc-ball":
            w = cc_ball_real(rng, self.radius, self.n, m)
        elif self.kind == "uniform-box":
            w = box_real(rng, self.half_widths, m)
        else:
            from scipy.stats import truncnorm
            h, sg = np.asarray(self.half_widths), np.asarray(self.sigma)
            w = truncnorm.rvs(-h / sg, h / sg, scale=sg, size=(m, h.size), random_state=rng)
        return translate(self.center, w)

    def power_integral(self, q: float) -> float:
        """int rho^q, in closed form or by 1-d quadrature per axis."""
        if self.kind != "product-gaussian-truncated":
            V = self.support_volume
            return V ** (1.0 - q)
        from scipy.integrate import quad
        out = 1.0
        for h, sg in zip(self.half_widths, self.sigma):
            z = sg * sqrt(2 * np.pi) * erf(h / (sg * sqrt(2)))
            val, _ = quad(lambda u: (np.exp(-0.5 * (u / sg) ** 2) / z) ** q, -h, h, epsabs=1e-13)
            out *= val
        return out

    def shannon(self) -> float:
        """int rho log rho."""
        if self.kind != "product-gaussian-truncated":
            return -np.log(self.support_volume)
        from scipy.integrate import quad
        out = 0.0
        for h, sg in zip(self.half_widths, self.sigma):
            z = sg * sqrt(2 * np.pi) * erf(h / (sg * sqrt(2)))
            f = lambda u: np.exp(-0.5 * (u / sg) ** 2) / z
            val, _ = quad(lambda u: f(u) * np.log(f(u)), -h, h, epsabs=1e-13)
            out += val
        return out

    def bounding_box(self):
        """Axis-aligned real box containing the support (from corner/extreme points)."""
        if self.kind == "uniform-cc-ball":
            from heisineq._sampling import CC_BALL_T_EXTENT
            h = np.r_[np.full(2 * self.n, self.radius), CC_BALL_T_EXTENT * self.radius**2]
        else:
            h = np.asarray(self.half_widths)
        corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * h.size, indexing="ij")).reshape(h.size, -1).T * h
        # the t-shear 2 Im<zeta_c, w> is linear in w, so box corners bound the image
        img = translate(self.center, corners).to_real()
        return img.min(axis=0), img.max(axis=0)


# ------------------------------------------------------------- voxel grids

@dataclass(frozen=True, eq=False)
class VoxelGrid:
    lo: np.ndarray
    hi: np.ndarray
    res: tuple
    values: np.ndarray | None = None

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        res = tuple(int(r) for r in np.broadcast_to(self.res, lo.shape))
        if np.any(hi <= lo):
            raise ValueError("degenerate grid bounds")
        if min(res) < 2:
            raise ValueError("grid resolution must be >= 2 per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "res", res)

    @classmethod
    def fit(cls, coords: np.ndarray, res=DEFAULT_RES, margin: float = MARGIN) -> "VoxelGrid":
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        return cls(lo - margin * span, hi + margin * span, res)

    @property
    def cell_size(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.res)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.cell_size))

    def locate(self, coords: np.ndarray):
        """Flat cell index per point and an in-bounds mask."""
        rel = (coords - self.lo) / self.cell_size
        idx = np.floor(rel).astype(np.int64)
        res = np.asarray(self.res)
        idx = np.where(rel == res, res - 1, idx)  # upper face belongs to the last cell
        ok = np.all((idx >= 0) & (idx < res), axis=-1)
        flat = np.ravel_multi_index(tuple(np.clip(idx, 0, res - 1).T), self.res)
        return flat, ok

    def with_values(self, values) -> "VoxelGrid":
        return VoxelGrid(self.lo, self.hi, self.res, np.asarray(values, dtype=float).reshape(self.res))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)


def voxel_density(c: Cloud, g: VoxelGrid) -> VoxelGrid:
    flat, ok = g.locate(c.points.to_real())
    if not ok.all():
        raise ValueError(f"{(~ok).sum()} cloud points fall outside the grid bounds")
    mass = np.bincount(flat, c.weights, minlength=int(np.prod(g.res)))
    return g.with_values(mass / mass.sum() / g.cell_volume)


# --------------------------------------------------------------- entropies

def _u_function(u_kind: str, n: int, gamma: float | None):
    N = 2 * n + 1
    if u_kind == "renyi":
        g = 1.0 - 1.0 / N if gamma is None else gamma
        if not (1.0 - 1.0 / N - 1e-15 <= g <= 1.0):
            raise ValueError(f"renyi exponent must lie in [1-1/(2n+1), 1], got {g}")
        return (lambda r: -np.power(r, g)), ("power", g, -1.0)
    if u_kind == "shannon":
        return (lambda r: np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)), ("shannon",)
    if u_kind == "kinetic":
        if gamma is None or gamma < 1:
            raise ValueError("kinetic entropy needs gamma >= 1")
        return (lambda r: np.power(r, gamma)), ("power", gamma, 1.0)
    if u_kind == "tsallis":
        if gamma is None or gamma == 1 or gamma < 1.0 - 1.0 / N - 1e-15:
            raise ValueError("tsallis entropy needs gamma >= 1-1/(2n+1), gamma != 1")
        return (lambda r: (np.power(r, gamma) - r) / (gamma - 1.0)), ("tsallis", gamma)
    raise ValueError(f"unknown u_kind {u_kind!r}")


def entropy_u(rho, u_kind: str, n: int = 1, gamma: float | None = None) -> float:
    """Ent_U = int U(rho) for a voxel grid (cell sum) or a DensitySpec (closed form / quadrature)."""
    U, form = _u_function(u_kind, n, gamma)
    if isinstance(rho, DensitySpec):
        if form[0] == "shannon":
            return float(rho.shannon())
        if form[0] == "power":
            return float(form[2] * rho.power_integral(form[1]))
        g = form[1]
        return float((rho.power_integral(g) - 1.0) / (g - 1.0))
    return float(np.sum(U(rho.values)) * rho.cell_volume)


# --------------------------------------------------- transport experiments

@dataclass
class Transport:
    """Pooled output of several independent sample-and-solve batches."""
    x: HPoint
    y: HPoint
    mass: np.ndarray
    theta: np.ndarray
    static: np.ndarray
    batch: np.ndarray
    split_fraction: float


def sample_transport(spec0, target, sample_size: int, batches: int, seed: int) -> Transport:
    """Solve ``batches`` independent exact problems of size ``sample_size``.

    ``target`` is a DensitySpec or an HPoint (a point mass). Each batch draws from
    its own counter-based stream, so results do not depend on execution order.
    When ``target`` equals ``spec0`` the optimal plan is the identity and the
    source sample is reused (independent samples would only add matching noise).
    """
    xs, ys, masses, ths, sts, bid = [], [], [], [], [], []
    split = 0.0
    for k in range(batches):
        rng = stream(seed, k)
        a = Cloud.uniform(spec0.sample(rng, sample_size))
        if isinstance(target, HPoint):
            b = Cloud(HPoint(target.zeta.reshape(1, -1), target.t.reshape(1)), np.ones(1))
            plan = Plan(np.arange(sample_size), np.zeros(sample_size, dtype=np.int64), a.weights)
        elif spec0.same_as(target):
            b = a
            plan = Plan(np.arange(sample_size), np.arange(sample_size), a.weights)
        else:
            b = Cloud.uniform(target.sample(rng, sample_size))
            plan = solve_exact(a, b)
        th, _, st = pair_geometry(plan, a, b)
        split += plan.split_fraction() / batches
        xs.append(a.points[plan.src]); ys.append(b.points[plan.dst])
        masses.append(plan.mass / batches); ths.append(th); sts.append(st)
        bid.append(np.full(len(plan), k))
    return Transport(HPoint.concat(xs), HPoint.concat(ys), np.concatenate(masses),
                     np.concatenate(ths), np.concatenate(sts), np.concatenate(bid), split)


def _interp_points(tr: Transport, s: float) -> HPoint:
    z = midpoint(tr.x, tr.y, s)
    return HPoint(np.where(tr.static[:, None], tr.x.zeta, z.zeta), np.where(tr.static, tr.x.t, z.t))


def _split_se(values_fn, groups: np.ndarray, k: int = 8) -> float:
    """Standard error from k-way splitting: sd of group estimates / sqrt(k)."""
    est = np.array([values_fn(groups % k == g) for g in range(k)])
    return float(est.std(ddof=1) / np.sqrt(k))


def _weighted_mean_se(vals, w):
    w = w / w.sum()
    mean = float(np.sum(w * vals))
    var = float(np.sum(w * (vals - mean) ** 2))
    return mean, sqrt(var / max(len(vals) - 1, 1))


def check_entropy_inequality(spec0: DensitySpec, spec1: DensitySpec, s: float, u_kind: str,
                             sample_size: int = 400, seed: int = 0, gamma: float | None = None,
                             res: int = DEFAULT_RES, batches: int = 16,
                             transport: Transport | None = None) -> VerifyReport:
    """Ent_U(mu_s) <= sharp (tau-weighted) right side <= uniform right side.

    The left side is a voxel cell sum over the pooled interpolant of ``batches``
    independent problems; its standard error comes from 8-way splitting by batch.
    Right sides are plan-weighted averages of analytic-density integrands.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    n = spec0.n
    N = 2 * n + 1
    U, _ = _u_function(u_kind, n, gamma)
    tr = transport or sample_transport(spec0, spec1, sample_size, batches, seed)
    z = _interp_points(tr, s)
    coords = z.to_real()
    grid = VoxelGrid.fit(coords, res)

    def lhs_of(mask):
        c = Cloud(z[mask], tr.mass[mask] / tr.mass[mask].sum())
        return entropy_u(voxel_density(c, grid), u_kind, n, gamma)

    lhs = lhs_of(np.ones(len(tr.mass), dtype=bool))
    lhs_se = _split_se(lhs_of, tr.batch) if batches >= 8 else float("nan")

    r0 = spec0.pdf(tr.x)
    r1 = spec1.pdf(tr.y)
    w0 = np.where(tr.static, 1.0, tau_tilde(1.0 - s, tr.theta, n) ** N)
    w1 = np.where(tr.static, 1.0, tau_tilde(s, tr.theta, n) ** N)
    # int T U(rho/T) dx = E_mu[T U(rho/T) / rho]
    sharp_i = (1 - s) * w0 * U(r0 / w0) / r0 + s * w1 * U(r1 / w1) / r1
    unif_i = (1 - s) ** 3 * U(r0 / (1 - s) ** 2) / r0 + s**3 * U(r1 / s**2) / r1
    rhs, rhs_se = _weighted_mean_se(sharp_i, tr.mass)
    rhs_u, rhs_u_se = _weighted_mean_se(unif_i, tr.mass)
    # closed-form uniform bound from the DensitySpec entropies
    rhs_u_exact = _uniform_bound_exact(spec0, spec1, s, u_kind, n, gamma)

    tol = 3.0 * sqrt(lhs_se**2 + rhs_se**2) if np.isfinite(lhs_se) else 0.0
    tol_u = 3.0 * sqrt(lhs_se**2 + rhs_u_se**2) if np.isfinite(lhs_se) else 0.0
    ok_sharp = lhs <= rhs + tol
    ok_unif = lhs <= rhs_u + tol_u
    extra = {"u_kind": u_kind, "gamma": gamma, "s": s, "lhs_se": lhs_se, "rhs_se": rhs_se,
             "rhs_uniform": rhs_u, "rhs_uniform_se": rhs_u_se, "rhs_uniform_exact": rhs_u_exact,
             "margin_uniform": rhs_u - lhs, "pass_sharp": ok_sharp, "pass_uniform": ok_unif,
             "sharp_le_uniform": rhs <= rhs_u + 3 * sqrt(rhs_se**2 + rhs_u_se**2),
             "batches": batches, "theta_mean": float(np.mean(tr.theta)),
             "theta_max": float(np.max(tr.theta)), "split_fraction": tr.split_fraction}
    if u_kind == "shannon":
        extra["w_s"] = float(-2.0 * np.log((1 - s) ** (1 - s) * s**s))
    return VerifyReport(f"entropy-{u_kind}", lhs, rhs, rhs - lhs, tol, bool(ok_sharp and ok_unif),
                        seed, sample_size * batches, list(grid.res), extra)


def _uniform_bound_exact(spec0, spec1, s, u_kind, n, gamma):
    """(1-s)^3 int U(rho0/(1-s)^2) + s^3 int U(rho1/s^2) from closed forms."""
    def term(spec, c):
        # int U(rho / c) for the catalog U, via int rho^q and int rho log rho
        _, form = _u_function(u_kind, n, gamma)
        if form[0] == "shannon":
            return (spec.shannon() - np.log(c)) / c
        if form[0] == "power":
            return form[2] * spec.power_integral(form[1]) / c ** form[1]
        g = form[1]
        return (spec.power_integral(g) / c**g - 1.0 / c) / (g - 1.0)
    return float((1 - s) ** 3 * term(spec0, (1 - s) ** 2) + s**3 * term(spec1, s**2))


def check_density_bound(spec0: DensitySpec, target, s: float, sample_size: int = 400,
                        seed: int = 0, res: int = DEFAULT_RES, batches: int = 16,
                        transport: Transport | None = None) -> VerifyReport:
    """Cell-wise interpolant density bound.

    rho_s(y) <= tau_{1-s}(theta)^{-(2n+1)} rho0(psi_s^{-1} y) <= (1-s)^{-(2n+3)} rho0(...)

    The bound is averaged over the pairs landing in each cell; a cell violates when its
    count is implausible under a Poisson law with the bound's expected count.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    n = spec0.n
    N = 2 * n + 1
    tr = transport or sample_transport(spec0, target, sample_size, batches, seed)
    z = _interp_points(tr, s)
    grid = VoxelGrid.fit(z.to_real(), res)
    flat, _ = grid.locate(z.to_real())
    ncell = int(np.prod(grid.res))
    total = len(tr.mass)
    count = np.bincount(flat, minlength=ncell).astype(float)
    r0 = spec0.pdf(tr.x)
    # static pairs carry tau_hat = 1 - s
    sharp_factor = np.where(tr.static, (1.0 - s) ** (-N), tau(1.0 - s, tr.theta, n) ** (-N))
    unif_factor = (1.0 - s) ** (-(2 * n + 3))
    # expected count under the bound: sum over members of bound density / (members' mean)
    sharp_b = np.bincount(flat, sharp_factor * r0, minlength=ncell)
    unif_b = np.bincount(flat, unif_factor * r0, minlength=ncell)
    occupied = count > 0
    mean_sharp = np.where(occupied, sharp_b / np.maximum(count, 1), 0.0)
    mean_unif = np.where(occupied, unif_b / np.maximum(count, 1), 0.0)
    lam_sharp = mean_sharp * grid.cell_volume * total
    lam_unif = mean_unif * grid.cell_volume * total
    viol_sharp = _cell_excess(count, lam_sharp, occupied)
    viol_unif = _cell_excess(count, lam_unif, occupied)
    dens = count / total / grid.cell_volume
    ratio = np.where(occupied, dens / np.maximum(mean_sharp, 1e-300), 0.0)
    frac = float(viol_sharp.sum() / max(occupied.sum(), 1))
    extra = {"s": s, "occupied_cells": int(occupied.sum()), "violations_sharp": int(viol_sharp.sum()),
             "violations_uniform": int(viol_unif.sum()), "violation_fraction": frac,
             "max_density_over_sharp_bound": float(ratio.max()),
             "uniform_factor": unif_factor, "batches": batches}
    return VerifyReport("density-bound", float(ratio.max()), 1.0, frac, 0.0,
                        bool(viol_sharp.sum() == 0 and viol_unif.sum() == 0),
                        seed, sample_size * batches, list(grid.res), extra)


def check_jacobian_density(spec0: DensitySpec, spec1: DensitySpec, s: float, sample_size: int = 400,
                           seed: int = 0, res: int = DEFAULT_RES, batches: int = 16,
                           transport: Transport | None = None) -> VerifyReport:
    """rho_s(psi_s x)^{-1/N} >= tau_{1-s}(theta) rho0(x)^{-1/N} + tau_s(theta) rho1(psi x)^{-1/N}.

    rho_s is the voxel estimate at the midpoint cell. The bound density implied by
    the right side is averaged over the pairs in each cell; a cell violates when its
    count is implausible under a Poisson law with that mean.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    n = spec0.n
    N = 2 * n + 1
    tr = transport or sample_transport(spec0, spec1, sample_size, batches, seed)
    z = _interp_points(tr, s)
    grid = VoxelGrid.fit(z.to_real(), res)
    flat, _ = grid.locate(z.to_real())
    total = len(tr.mass)
    ncell = int(np.prod(grid.res))
    count = np.bincount(flat, minlength=ncell).astype(float)
    k = count[flat]
    rho_s = k / total / grid.cell_volume
    r0 = spec0.pdf(tr.x)
    r1 = spec1.pdf(tr.y)
    t0 = np.where(tr.static, 1.0 - s, tau(1.0 - s, tr.theta, n))
    t1 = np.where(tr.static, s, tau(s, tr.theta, n))
    rhs_i = t0 * r0 ** (-1.0 / N) + t1 * r1 ** (-1.0 / N)
    lhs_i = rho_s ** (-1.0 / N)
    bound_mean = np.bincount(flat, rhs_i ** (-N), minlength=ncell) / np.maximum(count, 1)
    lam = bound_mean * grid.cell_volume * total
    viol_cell = _cell_excess(count, lam, count > 0)
    viol = viol_cell[flat]
    frac = float(np.sum(tr.mass[viol]) / tr.mass.sum())
    lhs, _ = _weighted_mean_se(lhs_i, tr.mass)
    rhs, _ = _weighted_mean_se(rhs_i, tr.mass)
    extra = {"s": s, "violation_fraction": frac, "pairs": total, "violating_cells": int(viol_cell.sum()),
             "raw_violation_fraction": float(np.mean(lhs_i < rhs_i)), "batches": batches}
    return VerifyReport("jacobian-density", lhs, rhs, lhs - rhs, 0.0, frac == 0.0, seed,
                        sample_size * batches, list(grid.res), extra)
