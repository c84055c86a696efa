"""Acceptance criteria 1-13 on the artifacts of two ``reproduce-all`` runs.

Each test re-checks the stated tolerance on the numbers stored in the JSON reports
(not only the suite's own pass flag) and prints one PASS/FAIL line. The runs take
several minutes; select with ``-m slow`` or deselect with ``-m 'not slow'``.
"""

import json
import math
import time

import pytest

from heisineq.cli import main

pytestmark = pytest.mark.slow

SEED = 0
RUNTIME_LIMIT = 15 * 60


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    out = []
    for k in (1, 2):
        d = tmp_path_factory.mktemp(f"suite{k}")
        t0 = time.perf_counter()
        code = main(["reproduce-all", "--seed", str(SEED), "--out", str(d / "run")])
        out.append({"dir": d / "run", "code": code, "seconds": time.perf_counter() - t0})
    return out


@pytest.fixture(scope="module")
def crit(runs):
    rep = runs[0]["dir"] / "reports"

    def load(k):
        return json.loads((rep / f"criterion_{k:02d}.json").read_text())

    return load


@pytest.fixture
def verdict(request):
    """verdict(k, ok, detail): print the criterion line, then assert."""

    def _v(k, ok, detail=""):
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line

    return _v


def test_criterion_01_exp_log_roundtrip(crit, verdict):
    s = crit(1)["summary"]
    ok = s["max_err_n1"] <= 1e-9 and s["max_err_n2"] <= 1e-9 and s["runtime_ok"]
    verdict(1, ok, f"max err n=1 {s['max_err_n1']:.2e}, n=2 {s['max_err_n2']:.2e} (tol 1e-9), runtime<=10s {s['runtime_ok']}")


def test_criterion_02_closed_form_distances(crit, verdict):
    s = crit(2)["summary"]
    ok = s["horizontal_err"] <= 1e-12 and s["vertical_err"] <= 1e-9
    verdict(2, ok, f"|zeta| err {s['horizontal_err']:.2e} (1e-12), sqrt(pi|t|) err {s['vertical_err']:.2e} (1e-9)")


def test_criterion_03_distortion_identity(crit, verdict):
    s = crit(3)["summary"]
    ok = all(s[f"n{n}"]["identity_rel_err"] <= 1e-12 and s[f"n{n}"]["monotonicity_violations"] == 0
             and s[f"n{n}"]["lower_bound_violations"] == 0 for n in (1, 2, 3))
    worst = max(s[f"n{n}"]["identity_rel_err"] for n in (1, 2, 3))
    verdict(3, ok, f"max rel err {worst:.2e} (1e-12), monotonicity and lower-bound violations "
                   f"{[s[f'n{n}']['monotonicity_violations'] + s[f'n{n}']['lower_bound_violations'] for n in (1, 2, 3)]}")


def test_criterion_04_eps_convergence(crit, verdict):
    s = crit(4)["summary"]
    ok = s["eps2_quotient_spread"] <= 1e-8 and s["min_fitted_order"] >= 1.9 and s["v_eps_ge_s2_violations"] == 0
    verdict(4, ok, f"quotient spread {s['eps2_quotient_spread']:.2e} (1e-8), min order {s['min_fitted_order']:.3f} "
                   f"(>=1.9), v>=s^2 violations {s['v_eps_ge_s2_violations']}")


def test_criterion_05_distance_sandwich(crit, verdict):
    s = crit(5)["summary"]
    ok = s["upper_bound_holds"] and math.isfinite(s["max_gap_over_eps"]) and s["runtime_ok"]
    verdict(5, ok, f"proxy <= d_CC + 1e-9: {s['upper_bound_holds']}, (d_CC - proxy)/eps <= {s['max_gap_over_eps']:.4g}, "
                   f"runtime<=30s {s['runtime_ok']}")


def test_criterion_06_exact_ot(crit, verdict):
    s = crit(6)["summary"]
    verdict(6, s["max_cost_err"] <= 1e-10, f"max |solver - permutation| {s['max_cost_err']:.2e} (1e-10)")


def test_criterion_07_mcp(crit, verdict):
    c = crit(7)
    reps = c["reports"]
    bad = []
    for k, r in enumerate(reps):
        e = r
        for est, se in ((e["estimate_a"], e["se_a"]), (e["estimate_b"], e["se_b"])):
            if est < e["bound_tau"] - 3 * se or est < e["bound_s"] - 3 * se:
                bad.append(k)
        if abs(e["estimate_a"] - e["estimate_b"]) > 3 * math.hypot(e["se_a"], e["se_b"]):
            bad.append(k)
        if e["samples"] < 100000:
            bad.append(k)
    ok = len(reps) == 20 and not bad and c["summary"]["runtime_ok"]
    verdict(7, ok, f"{len(reps)} configs, bound/agreement failures {sorted(set(bad))}, "
                   f"runtime<=120s {c['summary']['runtime_ok']}")


def test_criterion_08_bm(crit, verdict):
    c = crit(8)
    reps = c["reports"]
    bad = [k for k, r in enumerate(reps)
           if not all(r["pass_per_res"].values()) or set(r["pass_per_res"]) != {"24", "48"}
           or min(r["lhs_per_res"].values() if "lhs_per_res" in r else [r["lhs"]]) < r["rhs"] - r["tolerance"]]
    max_theta = max(r["theta"] for r in reps if r["check"] == "bm-weighted")
    ok = len(reps) == 30 and not bad and max_theta > math.pi
    verdict(8, ok, f"{len(reps)} checks (weighted, i, ii on 10 configs), failures {bad}, max Theta {max_theta:.3f} > pi")


def test_criterion_09_quarter_sharpness(crit, verdict):
    c = crit(9)
    euc = next(r for r in c["reports"] if r["construction"] == "euclidean")
    at, ex = euc["ratio_at_ref"], euc["extrapolated"]
    ok = abs(at - 0.25) <= 0.10 * 0.25 and abs(ex - 0.25) <= 0.05 * 0.25 and c["summary"]["runtime_ok"]
    verdict(9, ok, f"Euclidean balls: ratio(r=0.05) {at:.4f} (0.25 +- 10%), extrapolated {ex:.4f} (0.25 +- 5%); "
                   f"adapted ellipsoids extrapolate to {c['summary']['adapted_extrapolated']:.4f}")


def test_criterion_10_asymptotics(crit, verdict):
    sl = crit(10)["summary"]["slopes"]
    ok = 0.7 <= sl["gap"] <= 1.3 and -0.5 <= sl["tau_s"] <= -0.15 and abs(sl["lhs"] - sl["rhs"]) <= 0.3
    verdict(10, ok, f"slope(2pi - Theta) {sl['gap']:.3f} in [0.7,1.3], slope(tau) {sl['tau_s']:.3f} in [-0.5,-0.15], "
                    f"|lhs - rhs exponent| {abs(sl['lhs'] - sl['rhs']):.3f} <= 0.3")


def test_criterion_11_bbl(crit, verdict):
    c = crit(11)
    reps = c["reports"]
    ineq = [r for r in reps if not all(r["pass_per_res"].values())]
    alias = [r for r in reps if r["refinement_change"] > 0.05]
    ps = {r["p"] for r in reps if r["mode"] == "weighted"}
    modes = {r["mode"] for r in reps if r["p"] == 0.0}
    quarter = all(r["constant"] == 0.25 for r in reps if r["mode"] == "nonweighted")
    ok = (len(reps) == 30 and not ineq and not alias and c["summary"]["runtime_ok"]
          and ps == {-0.3, 0.0, 1.0, math.inf} and modes == {"weighted", "uniform", "nonweighted"} and quarter)
    verdict(11, ok, f"inequality failures {len(ineq)}/30, refinement change > 5%: {len(alias)}/30 "
                    f"(max {c['summary']['max_refinement_change']:.3f}), runtime<=300s {c['summary']['runtime_ok']}")


def test_criterion_12_entropy(crit, verdict):
    c = crit(12)
    asserted = [r for r in c["reports"] if r["asserted"]]
    bad = []
    for r in asserted:
        if r["check"].startswith("entropy"):
            if r["margin"] < -r["tolerance"] or r["margin_uniform"] < -3 * math.hypot(r["lhs_se"], r["rhs_uniform_se"]):
                bad.append(f"{r['pair']}:{r['check']}")
        elif r["check"] == "density-bound":
            if r["violation_fraction"] != 0.0 or r["violations_uniform"] != 0:
                bad.append(f"{r['pair']}:{r['check']}")
    pairs = {r["pair"] for r in asserted}
    w_half = c["summary"]["w_half"]
    ok = len(pairs) == 5 and not bad and abs(w_half - 1.386294) < 1e-6
    verdict(12, ok, f"5 pairs x (Renyi, Shannon, uniform, Figalli-Juillet): failures {bad}, w(1/2) = {w_half:.6f}")


def test_criterion_13_determinism(runs, verdict):
    a, b = runs[0]["dir"], runs[1]["dir"]
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name != "manifest.json")
    diff = [str(f) for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file() and p.name != "manifest.json")
    wall = runs[0]["seconds"]
    ok = files == files_b and not diff and len(files) >= 13 and wall <= RUNTIME_LIMIT
    verdict(13, ok, f"{len(files)} report/table files, differing {diff}, wall time {wall:.0f} s (limit {RUNTIME_LIMIT} s)")
