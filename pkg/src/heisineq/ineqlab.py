"""Set-level inequality checks on H^n: Theta_{A,B}, Brunn-Minkowski (weighted and
non-weighted), MCP(0, 2n+3), multiplicative BM, Borell-Brascamp-Lieb grid scans,
sharpness of the constant 1/4 and small-ball asymptotics.

Volumes of sets with an exact membership test use hit-or-miss Monte Carlo.
Midpoint sets Z_s(A, B) use voxel occupancy (cells hit by sampled midpoints), except
where an exact membership test for Z_s exists (point sources via ``extend``, and
Euclidean balls/ellipsoids via a constrained least-squares search).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import gamma as gamma_fn

import numpy as np

from heisineq import _kernels
from heisineq._sampling import CC_BALL_T_EXTENT, box_real, cc_ball_real, stream, translate
from heisineq.ccgeo import cc_ball_volume, cc_log, cc_norm, extend, midpoint, theta_angle
from heisineq.distortion import inf_times_zero, tau
from heisineq.hgroup import TWO_PI, HPoint, dilate, inv, mul
from heisineq.otlab import DensitySpec, VerifyReport, VoxelGrid

SET_KINDS = ("cc-ball", "koranyi-box", "euclidean-ball", "point")
DEFAULT_Q = 0.001
Q_SWEEP = (0.01, 0.001, 0.0001)
BM_RES = 24
BBL_RES = 15
BBL_REFINE = 21
ALIAS_TOL = 0.05


class GridAliasingError(RuntimeError):
    pass


# ------------------------------------------------------------------ sets

@dataclass(frozen=True, eq=False)
class SetSpec:
    """A ball, box or point of H^n.

    cc-ball: B_CC(center, r); koranyi-box: center . prod [-h_k, h_k] (a left
    translate of a coordinate box, size = half-widths); euclidean-ball: the round
    ball of radius r around the coordinates of ``center``; point: {center}.
    """

    kind: str
    center: HPoint
    size: tuple = ()

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ValueError(f"unknown set kind {self.kind!r}")
        if self.center.t.ndim != 0:
            raise ValueError("a SetSpec center must be a single point")
        size = tuple(float(v) for v in np.atleast_1d(self.size))
        dim = 2 * self.center.n + 1
        if self.kind == "koranyi-box" and len(size) != dim:
            raise ValueError(f"koranyi-box needs {dim} half-widths")
        if self.kind in ("cc-ball", "euclidean-ball") and len(size) != 1:
            raise ValueError(f"{self.kind} needs one radius")
        if self.kind != "point" and not all(v > 0 for v in size):
            raise ValueError("set sizes must be positive")
        object.__setattr__(self, "size", size)

    @classmethod
    def point(cls, x: HPoint) -> "SetSpec":
        return cls("point", x)

    @property
    def n(self) -> int:
        return self.center.n

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def volume(self) -> float:
        if self.kind == "point":
            return 0.0
        if self.kind == "cc-ball":
            return cc_ball_volume(self.size[0], self.n)
        if self.kind == "koranyi-box":
            return float(np.prod(2.0 * np.asarray(self.size)))
        d = self.dim
        return float(np.pi ** (d / 2) / gamma_fn(d / 2 + 1) * self.size[0] ** d)

    def contains(self, x: HPoint):
        if self.kind == "point":
            return np.all(x.to_real() == self.center.to_real(), axis=-1)
        if self.kind == "euclidean-ball":
            return np.linalg.norm(x.to_real() - self.center.to_real(), axis=-1) <= self.size[0]
        w = mul(inv(self.center), x)
        if self.kind == "cc-ball":
            return cc_norm(w) <= self.size[0]
        return np.all(np.abs(w.to_real()) <= np.asarray(self.size), axis=-1)

    def sample(self, rng: np.random.Generator, m: int) -> HPoint:
        if self.kind == "point":
            return HPoint(np.repeat(self.center.zeta[None, :], m, axis=0), np.full(m, float(self.center.t)))
        if self.kind == "cc-ball":
            return translate(self.center, cc_ball_real(rng, self.size[0], self.n, m))
        if self.kind == "koranyi-box":
            return translate(self.center, box_real(rng, self.size, m))
        # euclidean ball: direction times radius * U^{1/d}
        g = rng.standard_normal((m, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = self.size[0] * rng.uniform(size=(m, 1)) ** (1.0 / self.dim)
        return HPoint.from_real(self.center.to_real() + rad * g)

    def bounding_box(self):
        c = self.center.to_real()
        if self.kind == "point":
            return c, c
        if self.kind == "euclidean-ball":
            return c - self.size[0], c + self.size[0]
        if self.kind == "cc-ball":
            r = self.size[0]
            h = np.r_[np.full(2 * self.n, r), CC_BALL_T_EXTENT * r * r]
        else:
            h = np.asarray(self.size)
        corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * h.size, indexing="ij")).reshape(h.size, -1).T * h
        img = translate(self.center, corners).to_real()
        return img.min(axis=0), img.max(axis=0)

    def dilate(self, lam: float) -> "SetSpec":
        """Image under the anisotropic dilation (lambda zeta, lambda^2 t)."""
        c = dilate(lam, self.center)
        if self.kind == "point":
            return SetSpec("point", c)
        if self.kind == "cc-ball":
            return SetSpec("cc-ball", c, (lam * self.size[0],))
        if self.kind == "koranyi-box":
            h = np.asarray(self.size)
            h = np.r_[lam * h[:-1], lam * lam * h[-1]]
            return SetSpec("koranyi-box", c, tuple(h))
        raise ValueError("the dilation of a Euclidean ball is not a Euclidean ball")

    def indicator(self, x: HPoint):
        return self.contains(x).astype(float)


def set_from_dict(d: dict, n: int = 1) -> SetSpec:
    c = np.asarray(d.get("center", [0.0] * (2 * n + 1)), dtype=float)
    center = HPoint.from_real(c)
    if d["kind"] == "point":
        return SetSpec.point(center)
    return SetSpec(d["kind"], center, tuple(np.atleast_1d(d["size"])))


# ------------------------------------------------------------ volumes

def volume_mc(A: SetSpec, samples: int = 100000, seed: int = 0):
    """Hit-or-miss volume over the bounding box: (estimate, standard error)."""
    if samples < 1000:
        raise ValueError("volume_mc needs at least 10^3 samples")
    if A.kind == "point":
        return 0.0, 0.0
    lo, hi = A.bounding_box()
    if np.any(hi - lo <= 0):
        raise ValueError("degenerate bounding box")
    rng = stream(seed, 101)
    x = HPoint.from_real(lo + (hi - lo) * rng.uniform(size=(samples, lo.size)))
    p = float(np.mean(A.contains(x)))
    box = float(np.prod(hi - lo))
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def _set_volume(A: SetSpec):
    return A.volume(), 0.0


# ------------------------------------------------------------------ Theta

@dataclass
class ThetaEstimate:
    value: float
    raw_min: float
    quantile: float
    sweep: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _pairs(A: SetSpec, B: SetSpec, samples: int, seed: int, key: int):
    rng = stream(seed, key)
    return A.sample(rng, samples), B.sample(rng, samples)


def theta_ab(A: SetSpec, B: SetSpec, samples: int = 100000, quantile: float = DEFAULT_Q,
             seed: int = 0) -> ThetaEstimate:
    """Essential infimum of theta(x, y) over A x B as a low quantile of sampled pairs."""
    x, y = _pairs(A, B, samples, seed, 11)
    th = theta_angle(x, y)
    sweep = {q: float(np.quantile(th, q)) for q in Q_SWEEP}
    return ThetaEstimate(float(np.quantile(th, quantile)), float(th.min()), quantile, sweep)


# ------------------------------------------------------------ occupancy

def occupancy_volume(coords: np.ndarray, res) -> float:
    """Number of grid cells hit times cell volume; grid fitted to the points."""
    if len(coords) == 0:
        return 0.0
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    if np.any(hi - lo <= 0):
        return 0.0
    grid = VoxelGrid(lo, hi, res)
    flat, _ = grid.locate(coords)
    return np.unique(flat).size * grid.cell_volume


@dataclass
class ZsetEstimate:
    estimate: float
    standard_error: float
    refined: float
    res: int
    per_res: dict = field(default_factory=dict)


def _midpoint_sample(A: SetSpec, B: SetSpec, s: float, samples: int, seed: int) -> np.ndarray:
    x, y = _pairs(A, B, samples, seed, 13)
    return midpoint(x, y, s).to_real()


def zset_volume(A: SetSpec, B: SetSpec, s: float, samples: int = 200000, voxel_res: int = BM_RES,
                seed: int = 0) -> ZsetEstimate:
    """Voxel-occupancy estimate of L(Z_s(A, B)) at res and 2 res.

    The standard error is the change between the half and full sample (a sampling
    convergence diagnostic, not a binomial error).
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if A.kind == "point" and B.kind == "point":
        return ZsetEstimate(0.0, 0.0, 0.0, voxel_res, {voxel_res: 0.0, 2 * voxel_res: 0.0})
    z = _midpoint_sample(A, B, s, samples, seed)
    full = {r: occupancy_volume(z, r) for r in (voxel_res, 2 * voxel_res)}
    half = occupancy_volume(z[: samples // 2], voxel_res)
    return ZsetEstimate(full[voxel_res], abs(full[voxel_res] - half), full[2 * voxel_res], voxel_res, full)


# ----------------------------------------------------------------- BM

def _root(v, N):
    return float(v) ** (1.0 / N) if v > 0 else 0.0


def _root_se(v, se, N):
    return float(v ** (1.0 / N - 1) * se / N) if v > 0 else 0.0


def check_bm_weighted(A: SetSpec, B: SetSpec, s: float, samples: int = 200000, seed: int = 0,
                      res: int = BM_RES) -> VerifyReport:
    """L(Z_s)^{1/N} >= tau_{1-s}(Theta) L(A)^{1/N} + tau_s(Theta) L(B)^{1/N}, N = 2n+1."""
    n = A.n
    N = 2 * n + 1
    th = theta_ab(A, B, min(samples, 100000), seed=seed)
    vA, vB = A.volume(), B.volume()
    rhs = float(inf_times_zero(tau(1 - s, th.value, n), _root(vA, N))
                + inf_times_zero(tau(s, th.value, n), _root(vB, N)))
    z = zset_volume(A, B, s, samples, res, seed)
    lhs = {r: _root(v, N) for r, v in z.per_res.items()}
    tol = 3.0 * _root_se(z.estimate, z.standard_error, N)
    ok = {r: lhs[r] >= rhs - tol for r in lhs}
    rhs_i = (1 - s) ** ((2 * n + 3) / N) * _root(vA, N) + s ** ((2 * n + 3) / N) * _root(vB, N)
    extra = {"s": s, "theta": th.value, "theta_raw_min": th.raw_min, "theta_sweep": _keys(th.sweep),
             "vol_A": vA, "vol_B": vB, "vol_Z": _keys(z.per_res), "lhs_per_res": _keys(lhs),
             "pass_per_res": _keys(ok), "rhs_nonweighted_i": rhs_i,
             "rhs_ge_nonweighted_i": rhs >= rhs_i * (1 - 1e-12)}
    lhs0 = min(lhs.values())
    return VerifyReport("bm-weighted", lhs0, rhs, lhs0 - rhs, tol, all(ok.values()), seed, samples,
                        [res, 2 * res], extra)


def check_bm_nonweighted(A: SetSpec, B: SetSpec, s: float, variant: str = "i", samples: int = 200000,
                         seed: int = 0, res: int = BM_RES) -> VerifyReport:
    n = A.n
    N = 2 * n + 1
    vA, vB = A.volume(), B.volume()
    z = zset_volume(A, B, s, samples, res, seed)
    if variant == "i":
        e = N
        rhs = (1 - s) ** ((2 * n + 3) / N) * _root(vA, N) + s ** ((2 * n + 3) / N) * _root(vB, N)
    elif variant == "ii":
        e = 2 * n + 3
        rhs = 0.25 ** (1.0 / e) * ((1 - s) * _root(vA, e) + s * _root(vB, e))
    else:
        raise ValueError("variant must be 'i' or 'ii'")
    lhs = {r: _root(v, e) for r, v in z.per_res.items()}
    tol = 3.0 * _root_se(z.estimate, z.standard_error, e)
    ok = {r: lhs[r] >= rhs - tol for r in lhs}
    lhs0 = min(lhs.values())
    extra = {"s": s, "variant": variant, "vol_A": vA, "vol_B": vB, "vol_Z": _keys(z.per_res),
             "pass_per_res": _keys(ok)}
    return VerifyReport(f"bm-nonweighted-{variant}", lhs0, rhs, lhs0 - rhs, tol, all(ok.values()),
                        seed, samples, [res, 2 * res], extra)


def _keys(d: dict) -> dict:
    return {str(k): v for k, v in d.items()}


# ------------------------------------------------------------------ MCP

def zset_point_membership(x: HPoint, E: SetSpec, s: float, z: HPoint):
    """z in Z_s(x, E) iff the geodesic from x through z, prolonged to time 1, ends in E."""
    xs = HPoint(np.broadcast_to(x.zeta, z.zeta.shape), np.broadcast_to(x.t, z.t.shape))
    y, ok = extend(xs, z, s)
    return ok & E.contains(y)


def check_mcp(x: HPoint, E: SetSpec, s: float, samples: int = 100000, seed: int = 0,
              res: int = BM_RES) -> VerifyReport:
    """L(Z_s(x, E)) >= tau_s(Theta_{x,E})^{2n+1} L(E) >= s^{2n+3} L(E), two estimators.

    (a) hit-or-miss with the exact membership test over the bounding box of sampled
        midpoints (enlarged by 10%); voxel-occupancy values are kept as diagnostics.
    (b) change of variables: L(E) * mean over w in E of tau_s(theta(x, w))^{2n+1}.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    n = E.n
    N = 2 * n + 1
    P = SetSpec.point(x)
    volE = E.volume()
    rng = stream(seed, 21)
    w = E.sample(rng, samples)
    xs = HPoint(np.broadcast_to(x.zeta, w.zeta.shape), np.broadcast_to(x.t, w.t.shape))
    log = cc_log(mul(inv(xs), w))
    th = np.where(log.on_center, TWO_PI, np.abs(log.param.theta))
    jac = tau(s, np.minimum(th, TWO_PI), n) ** N
    finite = np.isfinite(jac)
    jac = np.where(finite, jac, 0.0)  # center hits are a null set
    est_b = volE * float(jac.mean())
    se_b = volE * float(jac.std(ddof=1) / np.sqrt(samples))

    z = midpoint(xs, w, s).to_real()
    lo, hi = z.min(axis=0), z.max(axis=0)
    pad = 0.1 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    zz = HPoint.from_real(lo + (hi - lo) * rng.uniform(size=(samples, lo.size)))
    hit = zset_point_membership(x, E, s, zz)
    box = float(np.prod(hi - lo))
    p = float(hit.mean())
    est_a = box * p
    se_a = box * np.sqrt(p * (1 - p) / samples)
    shell = np.any((zz.to_real() - lo < 0.02 * (hi - lo)) | (hi - zz.to_real() < 0.02 * (hi - lo)), axis=-1)
    occ = {r: occupancy_volume(z, r) for r in (res, 2 * res)}

    theta = theta_ab(P, E, samples, seed=seed)
    bound_tau = float(tau(s, theta.value, n)) ** N * volE
    bound_s = s ** (2 * n + 3) * volE
    tol_a, tol_b = 3 * se_a, 3 * se_b
    ok = (est_a >= bound_tau - tol_a and est_b >= bound_tau - tol_b
          and est_a >= bound_s - tol_a and est_b >= bound_s - tol_b)
    agree = abs(est_a - est_b) <= 3 * np.hypot(se_a, se_b)
    extra = {"s": s, "vol_E": volE, "estimate_a": est_a, "se_a": se_a, "estimate_b": est_b, "se_b": se_b,
             "estimators_agree": bool(agree), "theta": theta.value, "theta_raw_min": theta.raw_min,
             "bound_tau": bound_tau, "bound_s": bound_s, "contraction_factor": est_b / volE,
             "occupancy": _keys(occ), "hits_in_outer_shell": int(np.sum(hit & shell))}
    lhs = min(est_a, est_b)
    return VerifyReport("mcp", lhs, bound_tau, lhs - bound_tau, max(tol_a, tol_b), bool(ok), seed,
                        samples, [res, 2 * res], extra)


# ------------------------------------------------------- multiplicative BM

def check_mult_bm(A: SetSpec, B: SetSpec, samples: int = 200000, seed: int = 0,
                  res: int = BM_RES) -> VerifyReport:
    """L(A.B)^{1/N} >= L(A)^{1/N} + L(B)^{1/N} at N = 2n+1; N = 2n+2 is only logged.

    Products of sampled pairs are voxel-occupied; when one factor is a point the
    product is a translate and the exact membership test is used instead.
    """
    n = A.n
    vA, vB = A.volume(), B.volume()
    rng = stream(seed, 31)
    if A.kind == "point" or B.kind == "point":
        a = A.center if A.kind == "point" else None
        b = B.center if B.kind == "point" else None
        S = B if a is not None else A
        if a is not None and b is not None:
            est, se = 0.0, 0.0
        else:
            lo, hi = S.bounding_box()
            corners = np.array(np.meshgrid(*[[0.0, 1.0]] * lo.size, indexing="ij")).reshape(lo.size, -1).T
            pts = HPoint.from_real(lo + (hi - lo) * corners)
            img = (mul(a, pts) if a is not None else mul(pts, b)).to_real()
            blo, bhi = img.min(axis=0), img.max(axis=0)
            z = HPoint.from_real(blo + (bhi - blo) * rng.uniform(size=(samples, lo.size)))
            pre = mul(inv(a), z) if a is not None else mul(z, inv(b))
            p = float(np.mean(S.contains(pre)))
            box = float(np.prod(bhi - blo))
            est, se = box * p, box * np.sqrt(p * (1 - p) / samples)
        per_res = {"exact-membership": est}
    else:
        x, y = A.sample(rng, samples), B.sample(rng, samples)
        prod = mul(x, y).to_real()
        per_res = {r: occupancy_volume(prod, r) for r in (res, 2 * res)}
        est = per_res[res]
        se = abs(est - occupancy_volume(prod[: samples // 2], res))
    out = {}
    for N in (2 * n + 1, 2 * n + 2):
        rhs = _root(vA, N) + _root(vB, N)
        vals = [_root(v, N) for v in per_res.values()]
        tol = 3 * _root_se(est, se, N)
        out[N] = (min(vals), rhs, tol, all(v >= rhs - tol for v in vals))
    N = 2 * n + 1
    lhs, rhs, tol, ok = out[N]
    extra = {"vol_A": vA, "vol_B": vB, "vol_AB": _keys(per_res), "N": N,
             "ratio_N_top": out[N][0] / out[N][1] if out[N][1] > 0 else float("nan"),
             "ratio_N_hom": out[2 * n + 2][0] / out[2 * n + 2][1] if out[2 * n + 2][1] > 0 else float("nan"),
             "pass_N_hom": out[2 * n + 2][3]}
    return VerifyReport("mult-bm", lhs, rhs, lhs - rhs, tol, bool(ok), seed, samples, [res, 2 * res], extra)


# ---------------------------------------------------------- BBL / PL scans

@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative function for the BBL scan: scale * density or scale * indicator."""
    source: object
    scale: float = 1.0

    def __call__(self, x: HPoint):
        if isinstance(self.source, DensitySpec):
            return self.scale * self.source.pdf(x)
        return self.scale * self.source.indicator(x)

    def bounding_box(self):
        return self.source.bounding_box()


def pmean(a, b, s, p):
    """M_s^p(a, b) with the conventions at p = 0, +-inf and value 0 when ab = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if p == np.inf:
            v = np.maximum(a, b)
        elif p == -np.inf:
            v = np.minimum(a, b)
        elif p == 0:
            v = a ** (1 - s) * b**s
        else:
            v = ((1 - s) * a**p + s * b**p) ** (1.0 / p)
    return np.where((a > 0) & (b > 0), v, 0.0)[()]


_MODES = {"weighted": _kernels.MODE_WEIGHTED, "uniform": _kernels.MODE_UNIFORM,
          "nonweighted": _kernels.MODE_NONWEIGHTED}


def _check_p(p, mode, n):
    lo = -1.0 / (2 * n + 3) if mode == "nonweighted" else -1.0 / (2 * n + 1)
    if not p >= lo - 1e-15:
        raise ValueError(f"p = {p} below the admissible range [{lo:.4g}, inf] for mode {mode}")


def conclusion_exponent(p, mode, n=1):
    k = 2 * n + 3 if mode == "nonweighted" else 2 * n + 1
    if p == np.inf:
        return 1.0 / k
    den = 1 + k * p
    if den <= 0:
        return -np.inf
    return p / den


def _grid_cells(f: GridFunction, res: int):
    """Cell centers where f > 0, their values, the cell volume and a support-boundary mask."""
    lo, hi = f.bounding_box()
    g = VoxelGrid(lo, hi, res)
    axes = [g.lo[k] + (np.arange(g.res[k]) + 0.5) * g.cell_size[k] for k in range(lo.size)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
    vals = f(HPoint.from_real(pts))
    keep = vals > 0
    inside = np.pad(keep.reshape(tuple(g.res)), 1)
    interior = np.ones_like(inside)
    for k in range(lo.size):
        interior &= np.roll(inside, 1, axis=k) & np.roll(inside, -1, axis=k)
    edge = (inside & ~interior)[(slice(1, -1),) * lo.size].reshape(-1)
    return pts[keep], vals[keep], g.cell_volume, edge[keep]


def bbl_scan(f: GridFunction, g: GridFunction, s: float, combos, res: int = BBL_RES):
    """Minimal admissible h on a res^3 grid for each (p, mode) combo.

    Returns {combo: (int h, int f, int g)} with cell-sum integrals.
    """
    X, fv, cf, ex = _grid_cells(f, res)
    Y, gv, cg, ey = _grid_cells(g, res)
    if X.shape[1] != 3:
        raise ValueError("the BBL grid scan is implemented for n = 1")
    if len(X) == 0 or len(Y) == 0:
        raise ValueError("f or g vanishes on the grid")
    # midpoint extremes come from pairs of support-boundary cells; a tight box keeps cells small
    lo, hi = _kernels.midpoint_bounds(X[ex], Y[ey], s)
    pad = 0.02 * (hi - lo) + 1e-9
    lo, hi = lo - pad, hi + pad
    ps = np.array([float(c[0]) for c in combos])
    modes = np.array([_MODES[c[1]] for c in combos], dtype=np.int64)
    for _ in range(3):
        grid = VoxelGrid(lo, hi, res)
        H = np.zeros((len(combos), int(np.prod(grid.res))))
        bounds = np.array([[np.inf] * 3, [-np.inf] * 3])
        oob = _kernels.bbl_scan(X, fv, Y, gv, s, grid.lo, grid.cell_size, np.asarray(grid.res, dtype=np.int64),
                                ps, modes, H, bounds)
        if oob == 0:
            break
        span = bounds[1] - bounds[0]
        lo, hi = bounds[0] - 0.01 * span - 1e-9, bounds[1] + 0.01 * span + 1e-9
    else:
        raise RuntimeError("midpoint grid bounds did not stabilize")
    If, Ig = float(fv.sum() * cf), float(gv.sum() * cg)
    return {tuple(c): (float(H[k].sum() * grid.cell_volume), If, Ig) for k, c in enumerate(combos)}


def check_bbl_many(f: GridFunction, g: GridFunction, s: float, combos, grid_res: int = BBL_RES,
                   refine_res: int = BBL_REFINE, seed: int = 0, n: int = 1):
    """One pair scan per resolution serves every (p, mode) combo."""
    for p, mode in combos:
        _check_p(p, mode, n)
    coarse = bbl_scan(f, g, s, combos, grid_res)
    fine = bbl_scan(f, g, s, combos, refine_res) if refine_res else None
    reports = []
    for c in combos:
        p, mode = c
        q = conclusion_exponent(p, mode, n)
        const = 0.25 if mode == "nonweighted" else 1.0
        vals = {grid_res: coarse[tuple(c)]}
        if fine is not None:
            vals[refine_res] = fine[tuple(c)]
        lhs = {r: v[0] for r, v in vals.items()}
        rhs = {r: const * float(pmean(v[1], v[2], s, q)) for r, v in vals.items()}
        ok = {r: lhs[r] >= rhs[r] for r in vals}
        rel_change = (abs(lhs[grid_res] - lhs[refine_res]) / lhs[refine_res]
                      if fine is not None and lhs[refine_res] > 0 else 0.0)
        aliasing = rel_change > ALIAS_TOL
        r0 = grid_res
        extra = {"s": s, "p": p, "mode": mode, "conclusion_exponent": q, "constant": const,
                 "int_h": _keys(lhs), "rhs_per_res": _keys(rhs), "int_f": vals[r0][1], "int_g": vals[r0][2],
                 "pass_per_res": _keys(ok), "refinement_change": rel_change, "aliasing": aliasing}
        reports.append(VerifyReport(f"bbl-{mode}", lhs[r0], rhs[r0], lhs[r0] - rhs[r0], 0.0,
                                    bool(all(ok.values()) and not aliasing), seed, None,
                                    sorted(vals), extra))
    return reports


def check_bbl(f: GridFunction, g: GridFunction, s: float, p: float, grid_res: int = BBL_RES,
              weight_mode: str = "weighted", refine_res: int = BBL_REFINE, seed: int = 0) -> VerifyReport:
    return check_bbl_many(f, g, s, [(p, weight_mode)], grid_res, refine_res, seed)[0]


# ---------------------------------------------------------- 1/4 sharpness

def _midpoint_real(xr, yr, s):
    return midpoint(HPoint.from_real(xr), HPoint.from_real(yr), s).to_real()


def midpoint_differentials(a, b, s, h=1e-6):
    """Central-difference Jacobians of (x, y) -> midpoint(x, y, s) at (a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a.size
    Dx, Dy = np.empty((d, d)), np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        Dx[:, k] = (_midpoint_real(a + e, b, s) - _midpoint_real(a - e, b, s)) / (2 * h)
        Dy[:, k] = (_midpoint_real(a, b + e, s) - _midpoint_real(a, b - e, s)) / (2 * h)
    return _midpoint_real(a, b, s), Dx, Dy


def minkowski_ellipsoid_volume(M1, M2, directions: int = 20000) -> float:
    """Volume of M1 B + M2 B (B the unit ball) from support points on a Fibonacci sphere."""
    from scipy.spatial import ConvexHull

    d = M1.shape[0]
    if d != 3:
        raise ValueError("implemented for 3-d ellipsoids")
    k = np.arange(directions) + 0.5
    phi = np.arccos(1 - 2 * k / directions)
    th = np.pi * (1 + 5**0.5) * k
    u = np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])

    def support(M):
        v = u @ M
        return (v / np.linalg.norm(v, axis=1, keepdims=True)) @ M.T

    return float(ConvexHull(support(M1) + support(M2)).volume)


def _ball_lsq(c, M):
    """argmin_{|v| <= 1} |c + M v| for batches (m, d), (m, d, d), via SVD and a secular equation."""
    U, S, Vt = np.linalg.svd(M)
    ct = np.einsum("mji,mj->mi", U, c)
    S = np.maximum(S, 1e-300)
    w0 = -ct / S
    inside = np.sum(w0**2, axis=1) <= 1.0

    def norm2(lam):
        return np.sum((S * ct / (S**2 + lam[:, None])) ** 2, axis=1)

    lo = np.zeros(len(c))
    hi = np.ones(len(c))
    for _ in range(200):
        grow = norm2(hi) > 1.0
        if not grow.any():
            break
        hi[grow] *= 4.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        big = norm2(mid) > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    w = np.where(inside[:, None], w0, -S * ct / (S**2 + hi[:, None]))
    return np.einsum("mij,mi->mj", Vt, w)


def ellipsoid_zset_membership(z, a, La, b, Qb, r, s, iters: int = 8, h: float = 1e-6):
    """z in Z_s(A, B) for A = a + r La(unit ball), B = {y : |Qb (y - b)| <= r}.

    Minimizes |Qb(extend(a + r La v, z) - b)| over |v| <= 1 by projected Gauss-Newton
    (trust-region subproblems solved exactly); for small r the map is nearly affine
    and the iteration converges in a few steps.
    """
    m, d = z.shape
    v = np.zeros((m, d))
    Z = HPoint.from_real(z)

    def resid(vv):
        x = HPoint.from_real(a + r * vv @ La.T)
        y, ok = extend(x, Z, s)
        return (y.to_real() - b) @ Qb.T, ok

    for _ in range(iters):
        f0, _ = resid(v)
        J = np.empty((m, d, d))
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            J[:, :, k] = (resid(v + e)[0] - f0) / h
        c = f0 - np.einsum("mij,mj->mi", J, v)
        v = _ball_lsq(c, J)
    f, ok = resid(v)
    return ok & (np.sum(f**2, axis=1) <= r * r * (1 + 1e-12))


def richardson(r_list, values):
    """Extrapolate value(r) = L + c1 r + ... to r = 0 with a degree len-1 polynomial in r."""
    r = np.asarray(r_list, dtype=float)
    v = np.asarray(values, dtype=float)
    deg = min(len(r) - 1, 2)
    return float(np.polyfit(r, v, deg)[-1])


def check_quarter_sharpness(r_list=(0.2, 0.1, 0.05), samples: int = 100000, seed: int = 0,
                            construction: str = "euclidean", n: int = 1) -> VerifyReport:
    """Ratio L(Z_{1/2}(A_r, B_r)) / L(B_r) near a = (-1, 0, 0), b = (1, 0, 0).

    construction="euclidean": A_r, B_r round balls of radius r.
    construction="adapted": A_r = a + c r Dx^{-1}(ball), B_r = b + c r Dy^{-1}(ball) where
    Dx, Dy are the midpoint differentials at (a, b) and c makes both fit in the
    Euclidean r-ball; the first-order images coincide and the limit ratio is
    2^{2n+1} det(Dy) = 1/4.

    Volumes of Z use exact membership (constrained least squares) with hit-or-miss
    over a box built from the first-order model.
    """
    if n != 1:
        raise ValueError("implemented for n = 1")
    r_list = [float(r) for r in r_list]
    if any(r2 >= r1 for r1, r2 in zip(r_list, r_list[1:])) or min(r_list) < 0.01:
        raise ValueError("r_list must be decreasing with min r >= 0.01")
    s = 0.5
    a = np.array([-1.0, 0.0, 0.0])
    b = np.array([1.0, 0.0, 0.0])
    m0, Dx, Dy = midpoint_differentials(a, b, s)
    I = np.eye(3)
    if construction == "euclidean":
        La, Lb = I, I
    elif construction == "adapted":
        La, Lb = np.linalg.inv(Dx), np.linalg.inv(Dy)
        # common rescale so both ellipsoids fit in the Euclidean r-ball
        c = 1.0 / max(np.linalg.norm(La, 2), np.linalg.norm(Lb, 2))
        La, Lb = c * La, c * Lb
    else:
        raise ValueError("construction must be 'euclidean' or 'adapted'")
    Qb = np.linalg.inv(Lb)
    volB_unit = 4.0 / 3.0 * np.pi * abs(np.linalg.det(Lb))
    linear_limit = minkowski_ellipsoid_volume(Dx @ La, Dy @ Lb) / volB_unit
    jac_bound = 2 ** (2 * n + 1) * abs(np.linalg.det(Dx))
    half = 1.3 * (np.linalg.norm(Dx @ La, axis=1) + np.linalg.norm(Dy @ Lb, axis=1))
    ratios, ses, shell_hits = [], [], []
    for k, r in enumerate(r_list):
        rng = stream(seed, 51, k)
        hw = r * half
        z = m0 + rng.uniform(-1.0, 1.0, (samples, 3)) * hw
        hit = ellipsoid_zset_membership(z, a, La, b, Qb, r, s)
        p = float(hit.mean())
        box = float(np.prod(2 * hw))
        vb = volB_unit * r**3
        ratios.append(box * p / vb)
        ses.append(box * np.sqrt(p * (1 - p) / samples) / vb)
        edge = np.any(np.abs(z - m0) > 0.95 * hw, axis=1)
        shell_hits.append(int(np.sum(hit & edge)))
    extrap = richardson(r_list, ratios)
    target = 0.25
    r_ref = min(r_list, key=lambda r: abs(r - 0.05))
    at_ref = ratios[r_list.index(r_ref)]
    ok_ref = abs(at_ref - target) <= 0.10 * target
    ok_ext = abs(extrap - target) <= 0.05 * target
    extra = {"construction": construction, "r": r_list, "ratio": ratios, "se": ses,
             "extrapolated": extrap, "ratio_at_ref": at_ref, "r_ref": r_ref,
             "pass_ref_10pct": ok_ref, "pass_extrapolated_5pct": ok_ext,
             "jacobian_bound": jac_bound, "linearized_limit": linear_limit,
             "decreasing_in_r": bool(all(x >= y for x, y in zip(ratios, ratios[1:]))),
             "hits_near_box_edge": shell_hits, "det_Dx": float(np.linalg.det(Dx)),
             "det_Dy": float(np.linalg.det(Dy))}
    return VerifyReport(f"quarter-sharpness-{construction}", extrap, target, extrap - target,
                        0.05 * target, bool(ok_ref and ok_ext), seed, samples, None, extra)


# --------------------------------------------------------- ball asymptotics

def rotational_zset_volume(z: HPoint, res: int) -> float:
    """Occupancy volume of a set invariant under zeta -> e^{i phi} zeta (n = 1).

    Occupancy is taken in the (|zeta|, t) half-plane and each cell is weighted by the
    circumference 2 pi rho_c of its centre.
    """
    if z.n != 1:
        raise ValueError("rotational reduction implemented for n = 1")
    pts = np.column_stack([np.abs(z.zeta[:, 0]), z.t])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    grid = VoxelGrid(lo, hi, res)
    flat, _ = grid.locate(pts)
    cells = np.unique(flat)
    i, _ = np.unravel_index(cells, grid.res)
    rho = grid.lo[0] + (i + 0.5) * grid.cell_size[0]
    return float(np.sum(TWO_PI * rho) * grid.cell_size[0] * grid.cell_size[1])


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ball_asymptotics(r_list=(0.4, 0.2, 0.1, 0.05), s: float = 0.5, samples: int = 200000, seed: int = 0,
                     res: int = 64) -> VerifyReport:
    """Small-ball behaviour for A_r = B(0, r), B_r = B((0, 1), r) in H^1.

    Fits log-log slopes of L(Z_s), 2 pi - Theta, tau_s(Theta) and of both sides of
    weighted BM. Z_s(A_r, B_r) is rotation invariant, so its volume is estimated by
    occupancy in the (|zeta|, t) half-plane on a res x res grid (and 2 res).
    """
    n = 1
    N = 2 * n + 1
    r_list = [float(r) for r in r_list]
    o = HPoint(np.zeros(1, dtype=complex), 0.0)
    up = HPoint(np.zeros(1, dtype=complex), 1.0)
    rows = []
    for k, r in enumerate(r_list):
        A, B = SetSpec("cc-ball", o, (r,)), SetSpec("cc-ball", up, (r,))
        th = theta_ab(A, B, samples, seed=seed + k)
        x, y = _pairs(A, B, samples, seed + k, 61)
        z = midpoint(x, y, s)
        vz = rotational_zset_volume(z, res)
        vz2 = rotational_zset_volume(z, 2 * res)
        vA = A.volume()
        t_s, t_1s = float(tau(s, th.value, n)), float(tau(1 - s, th.value, n))
        rhs = t_1s * vA ** (1 / N) + t_s * vA ** (1 / N)
        rows.append({"r": r, "theta": th.value, "theta_raw_min": th.raw_min, "gap": TWO_PI - th.value,
                     "tau_s": t_s, "tau_1ms": t_1s, "vol_Z": vz, "vol_Z_refined": vz2, "vol_A": vA,
                     "lhs": vz ** (1 / N), "rhs": rhs, "bm_holds": vz ** (1 / N) >= rhs})
    r = np.array(r_list)
    col = lambda key: np.array([row[key] for row in rows])
    slopes = {"vol_Z": _slope(r, col("vol_Z")), "gap": _slope(r, col("gap")),
              "tau_s": _slope(r, col("tau_s")), "lhs": _slope(r, col("lhs")), "rhs": _slope(r, col("rhs"))}
    checks = {"vol_Z_slope_le_3.3": slopes["vol_Z"] <= 3.3,
              "gap_slope_in_[0.7,1.3]": 0.7 <= slopes["gap"] <= 1.3,
              "tau_slope_in_[-0.5,-0.15]": -0.5 <= slopes["tau_s"] <= -0.15,
              "lhs_rhs_exponents_within_0.3": abs(slopes["lhs"] - slopes["rhs"]) <= 0.3,
              "bm_holds_all_r": all(row["bm_holds"] for row in rows)}
    extra = {"s": s, "rows": rows, "slopes": slopes, "checks": checks, "tau_target": (1 - 2 * n) / (1 + 2 * n),
             "exponent_gap": slopes["lhs"] - slopes["rhs"]}
    return VerifyReport("ball-asymptotics", slopes["lhs"], slopes["rhs"], slopes["lhs"] - slopes["rhs"], 0.3,
                        bool(all(checks.values())), seed, samples, [res, 2 * res], extra)


# ----------------------------------------------------------------- tables

def to_csv(rows, path=None) -> str:
    """Long-form CSV (one row per dict); returns the text and writes it when a path is given."""
    rows = list(rows)
    keys = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
