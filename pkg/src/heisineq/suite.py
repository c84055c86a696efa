"""The acceptance suite: thirteen numbered criteria, shared by the CLI and the tests.

Each ``criterion_k(seed)`` returns a CriterionResult holding a pass flag, a small
summary dict, the VerifyReports it produced and long-form tables for CSV output.
Every random draw flows from ``seed`` through counter-based child streams, so the
criteria can run in any order or in separate processes.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np

from heisineq._sampling import stream
from heisineq.ccgeo import cc_dist, cc_log
from heisineq.distortion import tau
from heisineq.hgroup import TWO_PI, GeodesicParam, HPoint, gamma, jac_gamma
from heisineq.ineqlab import (
    GridFunction, SetSpec, ball_asymptotics, check_bbl_many, check_bm_nonweighted,
    check_bm_weighted, check_mcp, check_quarter_sharpness,
)
from heisineq.otlab import (
    Cloud, DensitySpec, _plain, check_density_bound, check_entropy_inequality,
    check_jacobian_density, cost_matrix, sample_transport, solve_exact,
)
from heisineq.riemapprox import EpsParam, bridge_limit_check, jac_gamma_eps, sandwich_check, v_eps


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "pass": bool(self.passed),
                "summary": _plain(self.summary), "reports": [r.to_json() for r in self.reports]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1, allow_nan=True)


def child_seed(seed: int, *key: int) -> int:
    return int(stream(seed, *key).integers(2**31 - 1))


def _H(*c) -> HPoint:
    return HPoint.from_real(np.array(c, dtype=float))


# ------------------------------------------------------------ formula oracles

def criterion_1(seed: int = 0) -> CriterionResult:
    summary = {}
    ok = True
    t0 = time.perf_counter()
    for n in (1, 2):
        rng = stream(seed, 1, n)
        c = rng.uniform(-2.0, 2.0, (100000, 2 * n + 1))
        g = HPoint.from_real(c)
        keep = np.sqrt(np.sum(np.abs(g.zeta) ** 2, axis=-1)) >= 1e-6
        g = g[keep]
        back = gamma(1.0, cc_log(g).param)
        err = float(np.max(np.abs(back.to_real() - g.to_real())))
        summary[f"max_err_n{n}"] = err
        summary[f"points_n{n}"] = int(keep.sum())
        ok &= err <= 1e-9
    secs = time.perf_counter() - t0
    summary["runtime_ok"] = secs <= 10.0
    return CriterionResult(1, "exp/log roundtrip", bool(ok and summary["runtime_ok"]), summary)


def criterion_2(seed: int = 0) -> CriterionResult:
    rng = stream(seed, 2)
    z = rng.normal(size=(1000, 1)) + 1j * rng.normal(size=(1000, 1))
    o = HPoint(np.zeros((1000, 1), dtype=complex), np.zeros(1000))
    err_h = float(np.max(np.abs(cc_dist(o, HPoint(z, np.zeros(1000))) - np.abs(z[:, 0]))))
    ts = np.array([0.1, 1.0, 10.0])
    o3 = HPoint(np.zeros((3, 1), dtype=complex), np.zeros(3))
    err_v = float(np.max(np.abs(cc_dist(o3, HPoint(np.zeros((3, 1), dtype=complex), ts)) - np.sqrt(np.pi * ts))))
    ok = err_h <= 1e-12 and err_v <= 1e-9
    return CriterionResult(2, "closed-form distances", ok, {"horizontal_err": err_h, "vertical_err": err_v})


def criterion_3(seed: int = 0) -> CriterionResult:
    s = np.linspace(0.005, 0.995, 200)
    th = np.linspace(0.0, TWO_PI, 200, endpoint=False)
    S, T = np.meshgrid(s, th, indexing="ij")
    summary = {}
    ok = True
    for n in (1, 2, 3):
        tv = tau(S, T, n)
        chi = np.zeros(T.shape + (n,), dtype=complex)
        chi[..., 0] = 1.0
        p = GeodesicParam(chi, T)
        ratio = (jac_gamma(S, p) / jac_gamma(1.0, p)) ** (1.0 / (2 * n + 1))
        rel = float(np.max(np.abs(tv - ratio) / ratio))
        mono = int(np.sum(np.diff(tv, axis=1) < 0))
        low = S ** ((2 * n + 3) / (2 * n + 1))
        lowv = int(np.sum(tv < low * (1 - 1e-13)))
        summary[f"n{n}"] = {"identity_rel_err": rel, "monotonicity_violations": mono,
                            "lower_bound_violations": lowv}
        ok &= rel <= 1e-12 and mono == 0 and lowv == 0
    return CriterionResult(3, "distortion identity, monotonicity, lower bound", bool(ok), summary)


def criterion_4(seed: int = 0) -> CriterionResult:
    rng = stream(seed, 4)
    eps_list = [1e-1, 1e-2, 1e-3]
    m = 50
    s = rng.uniform(0.05, 0.95, m)
    chi = (rng.normal(size=m) + 1j * rng.normal(size=m))[:, None]
    th = rng.uniform(-0.95, 0.95, m) * TWO_PI
    base = jac_gamma(s, GeodesicParam(chi, th))
    quot = np.array([(jac_gamma_eps(s, EpsParam(chi, th, e)) - base) / e**2 for e in eps_list])
    spread = float(np.max(np.abs(quot - quot[0]) / np.abs(quot[0])))
    orders = []
    for k in range(m):
        rep = bridge_limit_check(s[k], chi[k], th[k], eps_list)
        orders.append(rep.fitted_order)
    # v_s^eps >= s^2 on an (s, theta, eps) grid
    sg = np.linspace(0.02, 0.98, 40)
    tg = np.linspace(-0.99, 0.99, 41) * TWO_PI
    viol = 0
    for e in (1.0, 0.5, 0.1, 1e-2, 1e-3):
        S, T = np.meshgrid(sg, tg, indexing="ij")
        v = v_eps(S, EpsParam(np.ones(S.shape + (1,), dtype=complex), T, e))
        viol += int(np.sum(v < S**2 * (1 - 1e-12)))
    ok = spread <= 1e-8 and min(orders) >= 1.9 and viol == 0
    return CriterionResult(4, "eps-convergence", bool(ok), {
        "eps2_quotient_spread": spread, "min_fitted_order": float(min(orders)),
        "median_fitted_order": float(np.median(orders)), "v_eps_ge_s2_violations": viol})


def criterion_5(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rng = stream(seed, 5)
    x = HPoint.from_real(rng.uniform(-1, 1, (100, 3)))
    y = HPoint.from_real(rng.uniform(-1, 1, (100, 3)))
    rep = sandwich_check(x, y, [0.5, 0.25, 0.125])
    secs = time.perf_counter() - t0
    gaps = np.array(rep.extra["d_cc"])[None, :] - np.array(rep.extra["proxy"])
    ratio = float(np.max(gaps / np.array([0.5, 0.25, 0.125])[:, None]))
    ok = rep.extra["upper_bound_holds"] and np.isfinite(ratio) and secs <= 30
    return CriterionResult(5, "distance sandwich", bool(ok), {
        "upper_bound_holds": rep.extra["upper_bound_holds"], "max_gap_over_eps": ratio,
        "c_est": rep.extra["c_est"], "runtime_ok": secs <= 30})


def criterion_6(seed: int = 0) -> CriterionResult:
    rng = stream(seed, 6)
    worst = 0.0
    for k in range(50):
        m = 2 + k % 6
        a = Cloud.uniform(HPoint.from_real(rng.uniform(-1, 1, (m, 3))))
        b = Cloud.uniform(HPoint.from_real(rng.uniform(-1, 1, (m, 3))))
        C = cost_matrix(a, b)
        brute = min(C[np.arange(m), list(p)].sum() for p in itertools.permutations(range(m))) / m
        plan = solve_exact(a, b, cost=C)
        worst = max(worst, abs(float(np.sum(plan.mass * C[plan.src, plan.dst])) - brute))
    return CriterionResult(6, "exact OT oracle", bool(worst <= 1e-10), {"max_cost_err": float(worst)})


# ---------------------------------------------------------- inequality suites

def mcp_configs(seed: int, count: int = 20):
    rng = stream(seed, 7, 0)
    out = []
    for k in range(count):
        x = HPoint.from_real(rng.uniform(-1, 1, 3))
        c = HPoint.from_real(rng.uniform(-1.5, 1.5, 3))
        if k % 2 == 0:
            E = SetSpec("cc-ball", c, (float(rng.uniform(0.2, 0.8)),))
        else:
            E = SetSpec("koranyi-box", c, tuple(rng.uniform(0.15, 0.6, 3)))
        out.append((x, E, float(rng.uniform(0.2, 0.8))))
    return out


def criterion_7(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    reports, rows = [], []
    for k, (x, E, s) in enumerate(mcp_configs(seed)):
        r = check_mcp(x, E, s, samples=100000, seed=child_seed(seed, 7, k + 1))
        reports.append(r)
        e = r.extra
        rows.append({"config": k, "set": E.kind, "s": s, "vol_E": e["vol_E"], "estimate_a": e["estimate_a"],
                     "se_a": e["se_a"], "estimate_b": e["estimate_b"], "se_b": e["se_b"],
                     "bound_tau": e["bound_tau"], "bound_s": e["bound_s"], "theta": e["theta"],
                     "pass": r.passed, "agree": e["estimators_agree"]})
    secs = time.perf_counter() - t0
    bounds = all(r.passed for r in reports)
    agree = all(r.extra["estimators_agree"] for r in reports)
    return CriterionResult(7, "MCP suite", bool(bounds and agree and secs <= 120), {
        "bounds_hold": bounds, "estimators_agree": agree, "runtime_ok": secs <= 120,
        "min_contraction_over_s5": min(r.extra["contraction_factor"] / r.extra["s"] ** 5 for r in reports)},
        reports, {"mcp": rows})


def bm_configs():
    o = HPoint.origin(1)
    box = lambda c, h: SetSpec("koranyi-box", _H(*c), h)
    ball = lambda c, r: SetSpec("cc-ball", _H(*c), (r,))
    return [
        ("horizontal-boxes", box((0, 0, 0), (0.5, 0.5, 0.5)), box((2, 0, 0), (0.5, 0.5, 0.5)), 0.5),
        ("same-box", box((0, 0, 0), (0.5, 0.5, 0.5)), box((0, 0, 0), (0.5, 0.5, 0.5)), 0.5),
        ("unequal-boxes", box((0, 0, 0), (0.3, 0.6, 0.4)), box((1, 1, 0.5), (0.5, 0.2, 0.3)), 0.3),
        ("vertical-boxes", box((0, 0, 0), (0.3, 0.3, 0.3)), box((0, 0, 1.5), (0.3, 0.3, 0.3)), 0.5),
        ("vertical-stack-balls", ball((0, 0, 0), 0.2), ball((0, 0, 1), 0.2), 0.5),
        ("horizontal-balls", ball((0, 0, 0), 0.4), ball((1.5, 0.5, 0), 0.4), 0.5),
        ("ball-box", ball((0, 0, 0), 0.5), box((0.8, -0.4, 0.6), (0.4, 0.4, 0.4)), 0.7),
        ("small-large-balls", ball((0, 0, 0), 0.2), ball((1, 1, 1), 0.7), 0.4),
        ("tilted-boxes", box((0, 0, 0), (0.4, 0.4, 0.2)), box((0.5, 1.0, -0.8), (0.4, 0.2, 0.4)), 0.6),
        ("ball-origin-box", ball((0, 0, 0), 0.3), box((0, 0, 0.9), (0.5, 0.5, 0.2)), 0.5),
    ], o


def criterion_8(seed: int = 0) -> CriterionResult:
    configs, _ = bm_configs()
    reports, rows = [], []
    for k, (name, A, B, s) in enumerate(configs):
        sd = child_seed(seed, 8, k)
        rw = check_bm_weighted(A, B, s, samples=200000, seed=sd)
        ri = check_bm_nonweighted(A, B, s, "i", samples=200000, seed=sd)
        rii = check_bm_nonweighted(A, B, s, "ii", samples=200000, seed=sd)
        reports += [rw, ri, rii]
        for r in (rw, ri, rii):
            rows.append({"config": name, "check": r.check, "s": s, "lhs": r.lhs, "rhs": r.rhs,
                         "tolerance": r.tolerance, "pass": r.passed, "theta": rw.extra["theta"]})
    weighted = [r for r in reports if r.check == "bm-weighted"]
    stack_theta = max(r.extra["theta"] for r in weighted)
    cross = all(r.extra["rhs_ge_nonweighted_i"] for r in weighted)
    ok = all(r.passed for r in reports) and stack_theta > np.pi and cross
    return CriterionResult(8, "weighted and non-weighted BM", bool(ok), {
        "all_pass": all(r.passed for r in reports), "max_theta": stack_theta,
        "rhs_weighted_ge_rhs_i": cross,
        "failing": [f"{configs[i // 3][0]}:{r.check}" for i, r in enumerate(reports) if not r.passed]},
        reports, {"bm": rows})


def criterion_9(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    r_list = (0.2, 0.1, 0.05)
    euc = check_quarter_sharpness(r_list, samples=100000, seed=child_seed(seed, 9, 0), construction="euclidean")
    secs = time.perf_counter() - t0
    ada = check_quarter_sharpness(r_list, samples=100000, seed=child_seed(seed, 9, 1), construction="adapted")
    rows = []
    for rep in (euc, ada):
        for r, v, se in zip(r_list, rep.extra["ratio"], rep.extra["se"]):
            rows.append({"construction": rep.extra["construction"], "r": r, "ratio": v, "se": se,
                         "extrapolated": rep.extra["extrapolated"],
                         "linearized_limit": rep.extra["linearized_limit"]})
    return CriterionResult(9, "sharpness of 1/4 (Euclidean balls)", bool(euc.passed and secs <= 120), {
        "euclidean_ratio_r005": euc.extra["ratio_at_ref"], "euclidean_extrapolated": euc.extra["extrapolated"],
        "euclidean_linearized_limit": euc.extra["linearized_limit"],
        "adapted_ratio_r005": ada.extra["ratio_at_ref"], "adapted_extrapolated": ada.extra["extrapolated"],
        "adapted_pass": ada.passed, "jacobian_bound": euc.extra["jacobian_bound"], "runtime_ok": secs <= 120},
        [euc, ada], {"quarter": rows})


def criterion_10(seed: int = 0) -> CriterionResult:
    rep = ball_asymptotics((0.4, 0.2, 0.1, 0.05), 0.5, samples=200000, seed=child_seed(seed, 10))
    rows = [{k: v for k, v in row.items()} for row in rep.extra["rows"]]
    return CriterionResult(10, "small-ball asymptotics", rep.passed,
                           {"slopes": rep.extra["slopes"], "checks": rep.extra["checks"]}, [rep], {"asymptotics": rows})


def density_pairs():
    o = HPoint.origin(1)
    box = lambda c, h=(0.5, 0.5, 0.5): DensitySpec("uniform-box", _H(*c), h)
    return [
        ("horizontal", box((0, 0, 0)), box((2, 0, 0))),
        ("vertical", box((0, 0, 0)), box((0, 0, 1.5))),
        ("ball-box", DensitySpec("uniform-cc-ball", o, radius=0.6), box((0.5, 0.5, 0.8))),
        ("gauss-box", DensitySpec("product-gaussian-truncated", o, (0.6, 0.6, 0.6), sigma=(0.3, 0.3, 0.3)),
         box((1, 0, 0.5))),
        ("ball-stack", DensitySpec("uniform-cc-ball", o, radius=0.5),
         DensitySpec("uniform-cc-ball", _H(0, 0, 2), radius=0.5)),
    ]


BBL_COMBOS = [(-0.9 / 3.0, "weighted"), (0.0, "weighted"), (1.0, "weighted"), (np.inf, "weighted"),
              (0.0, "uniform"), (0.0, "nonweighted")]


def criterion_11(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    reports, rows = [], []
    for k, (name, f, g) in enumerate(density_pairs()):
        reps = check_bbl_many(GridFunction(f), GridFunction(g), 0.5, BBL_COMBOS, 15, 21, seed=child_seed(seed, 11, k))
        for r in reps:
            reports.append(r)
            e = r.extra
            rows.append({"pair": name, "mode": e["mode"], "p": e["p"], "exponent": e["conclusion_exponent"],
                         "int_h_15": e["int_h"]["15"], "int_h_21": e["int_h"]["21"], "rhs_15": e["rhs_per_res"]["15"],
                         "rhs_21": e["rhs_per_res"]["21"], "refinement_change": e["refinement_change"],
                         "pass": r.passed})
    secs = time.perf_counter() - t0
    ok = all(r.passed for r in reports)
    return CriterionResult(11, "BBL / Prekopa-Leindler grid suite", bool(ok and secs <= 300), {
        "all_pass": ok, "runtime_ok": secs <= 300,
        "inequality_holds_all_res": all(all(r.extra["pass_per_res"].values()) for r in reports),
        "max_refinement_change": max(r.extra["refinement_change"] for r in reports),
        "aliasing": sorted({rows[i]["pair"] + ":" + rows[i]["mode"] for i, r in enumerate(reports)
                            if r.extra["aliasing"]}),
        "failing": [f"{rows[i]['pair']}:{rows[i]['mode']}:p={rows[i]['p']}" for i, r in enumerate(reports)
                    if not r.passed]}, reports, {"bbl": rows})


def criterion_12(seed: int = 0) -> CriterionResult:
    reports, rows = [], []
    pairs = density_pairs()
    box = DensitySpec("uniform-box", HPoint.origin(1), (0.5, 0.5, 0.5))
    diag = ("identical", box, box)
    for k, (name, a, b) in enumerate(pairs + [diag]):
        asserted = name != "identical"
        tr = sample_transport(a, b, 400, 16, child_seed(seed, 12, k))
        kw = dict(sample_size=400, res=24, batches=16, transport=tr)
        reps = [check_entropy_inequality(a, b, 0.5, "renyi", **kw),
                check_entropy_inequality(a, b, 0.5, "shannon", **kw),
                check_density_bound(a, b, 0.5, **kw),
                check_jacobian_density(a, b, 0.5, **kw)]
        for r in reps:
            r.extra["pair"] = name
            r.extra["asserted"] = asserted
            reports.append(r)
            rows.append({"pair": name, "check": r.check, "lhs": r.lhs, "rhs": r.rhs,
                         "rhs_uniform": r.extra.get("rhs_uniform", float("nan")),
                         "lhs_se": r.extra.get("lhs_se", float("nan")),
                         "violation_fraction": r.extra.get("violation_fraction", float("nan")),
                         "pass": r.passed, "asserted": asserted})
    asserted = [r for r in reports if r.extra["asserted"] and r.check != "jacobian-density"]
    ok = all(r.passed for r in asserted)
    w_half = [r.extra["w_s"] for r in reports if r.check == "entropy-shannon"][0]
    return CriterionResult(12, "entropy suite and density bound", bool(ok and abs(w_half - np.log(4)) < 1e-12), {
        "all_asserted_pass": ok, "w_half": w_half,
        "jacobian_density_pass": all(r.passed for r in reports if r.check == "jacobian-density" and r.extra["asserted"]),
        "identical_pair_pass": [r.passed for r in reports if r.extra["pair"] == "identical"],
        "failing": [f"{r.extra['pair']}:{r.check}" for r in asserted if not r.passed]},
        reports, {"entropy": rows})


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 13)}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](seed)
    res.seconds = time.perf_counter() - t0
    return res
