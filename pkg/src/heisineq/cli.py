"""Command-line driver: ``heisineq dist | verify | reproduce-all``.

Exit codes: 0 every check passed, 1 an inequality check failed, 2 configuration
error, 3 numerical nonconvergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from heisineq import __version__
from heisineq.ccgeo import NonConvergenceError, cc_log
from heisineq.hgroup import TWO_PI, HPoint, inv, mul, norm2
from heisineq.otlab import DensitySpec, VerifyReport, _plain

log = logging.getLogger("heisineq")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONV = 0, 1, 2, 3
THREADS_ENV = "HEISINEQ_THREADS"


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ manifest

def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form; insensitive to key order."""
    text = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(text.encode()).hexdigest()


def versions() -> dict:
    import numba
    import scipy

    return {"heisineq": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    versions: dict
    wall_time: float
    artifacts: list = field(default_factory=list)
    command: str = ""
    failing: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"config_hash": self.config_hash, "seed": self.seed, "versions": self.versions,
                "wall_time_s": round(self.wall_time, 3), "artifacts": sorted(self.artifacts),
                "command": self.command, "failing": self.failing,
                "timings_s": {k: round(v, 3) for k, v in self.timings.items()}}

    def write(self, out: Path) -> None:
        (out / "manifest.json").write_text(json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n")


class RunDir:
    """Write-once output directory."""

    def __init__(self, path: Path):
        self.path = Path(path)
        if (self.path / "manifest.json").exists():
            raise ConfigError(f"{self.path} already holds a run; choose a fresh --out directory")
        self.path.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []

    def write(self, rel: str, text: str) -> None:
        p = self.path / rel
        if p.exists():
            raise ConfigError(f"refusing to overwrite {p}")
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.artifacts.append(rel)


# ------------------------------------------------------------------- points

def parse_point(text) -> HPoint:
    """'x1 y1 ... t', 'x1,y1,...,t' or a JSON list of 2n+1 reals."""
    try:
        if isinstance(text, (list, tuple)):
            vals = [float(v) for v in text]
        elif text.strip().startswith("["):
            vals = [float(v) for v in json.loads(text)]
        else:
            vals = [float(v) for v in text.replace(",", " ").split()]
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed point literal {text!r}: {exc}") from None
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise ConfigError(f"a point of H^n needs 2n+1 coordinates, got {len(vals)} in {text!r}")
    if not all(np.isfinite(vals)):
        raise ConfigError(f"non-finite coordinate in {text!r}")
    return HPoint.from_real(np.array(vals))


def dist_record(x: HPoint, y: HPoint) -> dict:
    if x.n != y.n:
        raise ConfigError(f"points live in different dimensions (n={x.n}, n={y.n})")
    g = mul(inv(x), y)
    lg = cc_log(g)
    chi = lg.param.chi
    theta = TWO_PI if lg.on_center else abs(float(lg.param.theta))
    return {"x": x.to_list(), "y": y.to_list(), "n": x.n,
            "d_cc": float(np.sqrt(norm2(chi))), "theta": theta,
            "chi": [[float(c.real), float(c.imag)] for c in chi],
            "theta_param": float(lg.param.theta),
            "unique": bool(lg.unique | lg.at_origin), "on_center": bool(lg.on_center)}


def cmd_dist(args) -> int:
    if args.from_json:
        try:
            rec = json.loads(Path(args.from_json).read_text())
            x, y = parse_point(rec["x"]), parse_point(rec["y"])
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read points from {args.from_json}: {exc}") from None
    else:
        if not (args.x and args.y):
            raise ConfigError("dist needs two points (or --from-json)")
        x, y = parse_point(args.x), parse_point(args.y)
    rec = dist_record(x, y)
    text = json.dumps(rec, sort_keys=True)
    if not args.json:
        print(f"d_CC = {rec['d_cc']:.15g}  theta = {rec['theta']:.15g}  unique = {rec['unique']}")
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "dist.json").write_text(text + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ configs

TOP_KEYS = {"name", "seed", "n", "checks", "description"}
SET_KEYS = {"kind", "center", "size"}
DENSITY_KEYS = {"kind", "center", "half_widths", "radius", "sigma"}
COMMON = {"type", "name", "invert"}
CHECK_KEYS = {
    "mcp": {"x", "set", "s", "samples", "res"},
    "bm-weighted": {"A", "B", "s", "samples", "res"},
    "bm-nonweighted": {"A", "B", "s", "variant", "samples", "res"},
    "mult-bm": {"A", "B", "samples", "res"},
    "bbl": {"f", "g", "s", "p", "mode", "res", "refine_res"},
    "quarter-sharpness": {"r_list", "samples", "construction"},
    "ball-asymptotics": {"r_list", "s", "samples", "res"},
    "entropy": {"rho0", "rho1", "s", "u_kind", "gamma", "sample_size", "batches", "res"},
    "density-bound": {"rho0", "rho1", "target_point", "s", "sample_size", "batches", "res"},
    "jacobian-density": {"rho0", "rho1", "s", "sample_size", "batches", "res"},
}
REQUIRED = {
    "mcp": {"x", "set", "s"}, "bm-weighted": {"A", "B", "s"}, "bm-nonweighted": {"A", "B", "s", "variant"},
    "mult-bm": {"A", "B"}, "bbl": {"f", "g", "s", "p"}, "quarter-sharpness": set(),
    "ball-asymptotics": set(), "entropy": {"rho0", "rho1", "s", "u_kind"}, "density-bound": {"rho0", "s"},
    "jacobian-density": {"rho0", "rho1", "s"},
}


def _unknown(d: dict, allowed: set, where: str):
    bad = sorted(set(d) - allowed)
    if bad:
        raise ConfigError(f"{where}: unknown key(s) {bad}; allowed: {sorted(allowed)}")


def _set(d, where, n):
    from heisineq.ineqlab import set_from_dict

    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a table")
    _unknown(d, SET_KEYS, where)
    try:
        sp = set_from_dict(d, n)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if sp.n != n:
        raise ConfigError(f"{where}: center has dimension n={sp.n}, config n={n}")
    return sp


def _density(d, where, n):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a table")
    _unknown(d, DENSITY_KEYS, where)
    try:
        c = HPoint.from_real(np.asarray(d.get("center", [0.0] * (2 * n + 1)), dtype=float))
        return DensitySpec(d["kind"], c, tuple(d.get("half_widths", ())), float(d.get("radius", 0.0)),
                           tuple(d.get("sigma", ())))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _grid_fn(d, where, n):
    from heisineq.ineqlab import GridFunction

    d = dict(d)
    scale = float(d.pop("scale", 1.0))
    if d.get("kind") in ("uniform-box", "uniform-cc-ball", "product-gaussian-truncated"):
        return GridFunction(_density(d, where, n), scale)
    return GridFunction(_set(d, where, n), scale)


def _s(v, where):
    if not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
        raise ConfigError(f"{where}.s: must be a number in (0, 1), got {v!r}")
    return float(v)


def build_check(c: dict, idx: int, n: int, seed: int):
    """Validate one [[checks]] table and return (name, thunk producing a VerifyReport)."""
    from heisineq import ineqlab, otlab
    from heisineq.suite import child_seed

    where = f"checks[{idx}]"
    if not isinstance(c, dict) or "type" not in c:
        raise ConfigError(f"{where}: each check needs a 'type'")
    kind = c["type"]
    if kind not in CHECK_KEYS:
        raise ConfigError(f"{where}.type: unknown check type {kind!r}; known: {sorted(CHECK_KEYS)}")
    _unknown(c, CHECK_KEYS[kind] | COMMON, where)
    missing = REQUIRED[kind] - set(c)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")
    sd = child_seed(seed, 100, idx)
    name = c.get("name", f"{idx:02d}-{kind}")
    g = c.get
    try:
        if kind == "mcp":
            x = parse_point(c["x"])
            E = _set(c["set"], f"{where}.set", n)
            s = _s(c["s"], where)
            fn = lambda: ineqlab.check_mcp(x, E, s, int(g("samples", 100000)), sd, int(g("res", 24)))
        elif kind in ("bm-weighted", "bm-nonweighted", "mult-bm"):
            A, B = _set(c["A"], f"{where}.A", n), _set(c["B"], f"{where}.B", n)
            samples, res = int(g("samples", 200000)), int(g("res", 24))
            if kind == "bm-weighted":
                s = _s(c["s"], where)
                fn = lambda: ineqlab.check_bm_weighted(A, B, s, samples, sd, res)
            elif kind == "bm-nonweighted":
                s = _s(c["s"], where)
                if c["variant"] not in ("i", "ii"):
                    raise ConfigError(f"{where}.variant: must be 'i' or 'ii'")
                fn = lambda: ineqlab.check_bm_nonweighted(A, B, s, c["variant"], samples, sd, res)
            else:
                fn = lambda: ineqlab.check_mult_bm(A, B, samples, sd, res)
        elif kind == "bbl":
            f, gg = _grid_fn(c["f"], f"{where}.f", n), _grid_fn(c["g"], f"{where}.g", n)
            s = _s(c["s"], where)
            p = float(c["p"]) if not isinstance(c["p"], str) else float(c["p"].replace("+", ""))
            mode = g("mode", "weighted")
            if mode not in ("weighted", "uniform", "nonweighted"):
                raise ConfigError(f"{where}.mode: unknown mode {mode!r}")
            ineqlab._check_p(p, mode, n)
            fn = lambda: ineqlab.check_bbl(f, gg, s, p, int(g("res", 15)), mode, int(g("refine_res", 21)), sd)
        elif kind == "quarter-sharpness":
            r_list = tuple(float(r) for r in g("r_list", (0.2, 0.1, 0.05)))
            fn = lambda: ineqlab.check_quarter_sharpness(r_list, int(g("samples", 100000)), sd,
                                                         g("construction", "euclidean"))
        elif kind == "ball-asymptotics":
            r_list = tuple(float(r) for r in g("r_list", (0.4, 0.2, 0.1, 0.05)))
            s = _s(g("s", 0.5), where)
            fn = lambda: ineqlab.ball_asymptotics(r_list, s, int(g("samples", 200000)), sd, int(g("res", 64)))
        else:
            rho0 = _density(c["rho0"], f"{where}.rho0", n)
            s = _s(c["s"], where)
            kw = dict(sample_size=int(g("sample_size", 400)), seed=sd, res=int(g("res", 24)),
                      batches=int(g("batches", 16)))
            if kind == "density-bound":
                if ("rho1" in c) == ("target_point" in c):
                    raise ConfigError(f"{where}: give exactly one of rho1, target_point")
                target = (_density(c["rho1"], f"{where}.rho1", n) if "rho1" in c
                          else parse_point(c["target_point"]))
                fn = lambda: otlab.check_density_bound(rho0, target, s, **kw)
            else:
                rho1 = _density(c["rho1"], f"{where}.rho1", n)
                if kind == "entropy":
                    otlab._u_function(c["u_kind"], n, g("gamma"))
                    fn = lambda: otlab.check_entropy_inequality(rho0, rho1, s, c["u_kind"], gamma=g("gamma"), **kw)
                else:
                    fn = lambda: otlab.check_jacobian_density(rho0, rho1, s, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from None

    if c.get("invert", False):
        def run():
            r = fn()
            # the flipped inequality holds only if the original fails beyond its tolerance
            r.passed = bool(r.margin < -r.tolerance)
            r.check += "-inverted"
            return r
        return name, run
    return name, fn


def load_config(spec: str) -> tuple[dict, str]:
    """Read a TOML file path or a bundled config name; returns (dict, source)."""
    p = Path(spec)
    try:
        if p.exists():
            text, src = p.read_text(), str(p)
        else:
            name = spec[:-5] if spec.endswith(".toml") else spec
            ref = resources.files("heisineq") / "configs" / f"{name}.toml"
            if not ref.is_file():
                raise ConfigError(f"no config file or bundled config named {spec!r}")
            text, src = ref.read_text(), f"bundled:{name}"
        return tomllib.loads(text), src
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{spec}: {exc}") from None


def validate_config(cfg: dict, seed_override=None):
    _unknown(cfg, TOP_KEYS, "config")
    n = cfg.get("n", 1)
    if not isinstance(n, int) or n < 1:
        raise ConfigError("config.n: must be a positive integer")
    seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
    checks = cfg.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("config: needs at least one [[checks]] table")
    built = [build_check(c, i, n, seed) for i, c in enumerate(checks)]
    names = [b[0] for b in built]
    if len(set(names)) != len(names):
        raise ConfigError("config: check names must be unique")
    return seed, built


def _threads(args) -> int:
    t = args.threads if args.threads is not None else int(os.environ.get(THREADS_ENV, "1") or 1)
    if t < 1:
        raise ConfigError("--threads must be >= 1")
    return t


def _run_named(item):
    name, fn = item
    return name, fn()


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    if not args.config:
        raise ConfigError("verify needs --config")
    cfg, src = load_config(args.config)
    seed, built = validate_config(cfg, args.seed)
    out = RunDir(Path(args.out or f"heisineq-out/{cfg.get('name', 'verify')}"))
    results = []
    for name, fn in built:
        log.info("running %s", name)
        results.append((name, fn()))
    failing = []
    for name, rep in results:
        out.write(f"reports/{name}.json", rep.dumps() + "\n")
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {name} ({rep.check}): lhs={rep.lhs:.6g} rhs={rep.rhs:.6g} margin={rep.margin:.3g}")
        if not rep.passed:
            failing.append(name)
    summary = {"config": src, "seed": seed, "checks": {n: bool(r.passed) for n, r in results}, "failing": failing}
    out.write("summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    full = dict(cfg, seed=seed)
    RunManifest(config_hash(full), seed, versions(), time.perf_counter() - t0, out.artifacts,
                "verify", failing).write(out.path)
    if failing:
        print("failing checks: " + ", ".join(failing))
        return EXIT_FAIL
    return EXIT_OK


# ------------------------------------------------------------- reproduce-all

# longest first so a process pool stays busy
SUITE_ORDER = (11, 12, 8, 9, 7, 10, 1, 4, 6, 5, 3, 2)


def _run_criterion(args):
    from heisineq.suite import run_criterion

    number, seed = args
    return run_criterion(number, seed)


def cmd_reproduce_all(args) -> int:
    from heisineq.ineqlab import to_csv

    t0 = time.perf_counter()
    seed = int(args.seed if args.seed is not None else 0)
    only = sorted(int(k) for k in args.only.split(",")) if args.only else sorted(SUITE_ORDER)
    if any(k not in SUITE_ORDER for k in only):
        raise ConfigError(f"--only: criteria are numbered 1..12, got {args.only}")
    out = RunDir(Path(args.out or "heisineq-out/reproduce-all"))
    jobs = [(k, seed) for k in SUITE_ORDER if k in only]
    threads = _threads(args)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_criterion, jobs))
    else:
        results = [_run_criterion(j) for j in jobs]
    results.sort(key=lambda r: r.number)
    lines, failing = [], []
    for r in results:
        out.write(f"reports/criterion_{r.number:02d}.json", r.dumps() + "\n")
        for tname, rows in r.tables.items():
            out.write(f"tables/{tname}.csv", to_csv(rows))
        lines.append(r.line())
        print(r.line())
        log.info("criterion %d took %.1f s", r.number, r.seconds)
        if not r.passed:
            failing.append(r.number)
    out.write("summary.json", json.dumps({"seed": seed, "criteria": {str(r.number): bool(r.passed) for r in results},
                                          "lines": lines}, sort_keys=True, indent=1) + "\n")
    cfg = {"suite": "acceptance", "seed": seed, "criteria": only}
    RunManifest(config_hash(cfg), seed, versions(), time.perf_counter() - t0, out.artifacts,
                "reproduce-all", failing, {str(r.number): r.seconds for r in results}).write(out.path)
    return EXIT_FAIL if failing else EXIT_OK


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config path or bundled config name")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    common.add_argument("--verbose", "-v", action="store_true")
    ap = argparse.ArgumentParser(prog="heisineq", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    d = sub.add_parser("dist", parents=[common], help="CC distance, angle and log of two points")
    d.add_argument("x", nargs="?", help="first point, e.g. '0 0 0'")
    d.add_argument("y", nargs="?", help="second point")
    d.add_argument("--from-json", help="read x and y from a JSON record written by dist")
    d.add_argument("--json", action="store_true", help="print only the JSON record")
    d.set_defaults(func=cmd_dist)
    v = sub.add_parser("verify", parents=[common], help="run the checks listed in a config")
    v.set_defaults(func=cmd_verify)
    r = sub.add_parser("reproduce-all", parents=[common], help="run the acceptance suite")
    r.add_argument("--only", help="comma-separated criterion numbers")
    r.set_defaults(func=cmd_reproduce_all)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"numerical nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
