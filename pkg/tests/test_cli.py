import json
import math
from pathlib import Path

import pytest

from heisineq.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, config_hash, load_config, main, parse_point

DATA = Path(__file__).parent / "data"


def run(*argv):
    return main([str(a) for a in argv])


def test_dist_closed_forms(capsys):
    assert run("dist", "0 0 0", "3 4 0", "--json") == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["d_cc"] == pytest.approx(5.0, abs=1e-12) and rec["theta"] == 0.0
    assert run("dist", "0 0 0", "0 0 1", "--json") == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["d_cc"] == pytest.approx(math.sqrt(math.pi), abs=1e-9)
    assert rec["theta"] == pytest.approx(2 * math.pi) and rec["unique"] is False


def test_dist_json_roundtrip(tmp_path, capsys):
    assert run("dist", "0.3,-0.2,0.7", "[1, 0.5, -0.4]", "--json", "--out", tmp_path) == EXIT_OK
    first = capsys.readouterr().out
    assert run("dist", "--from-json", tmp_path / "dist.json", "--json") == EXIT_OK
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("bad", ["0 0", "a b c", "0 0 nan", "1 2 3 4"])
def test_malformed_points(bad, capsys):
    assert run("dist", bad, "0 0 0") == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_parse_point_forms():
    assert parse_point("1 2 3").to_list() == parse_point("[1,2,3]").to_list() == parse_point([1, 2, 3]).to_list()
    assert parse_point("1 2 3 4 5").n == 2


def test_verify_bundled_config(tmp_path):
    out = tmp_path / "run"
    assert run("verify", "--config", DATA / "small_mcp.toml", "--out", out) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failing"] == [] and summary["checks"] == {"ball": True}
    rep = json.loads((out / "reports" / "ball.json").read_text())
    assert rep["pass"] is True and {"check", "lhs", "rhs", "margin", "tolerance", "seed"} <= set(rep)
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 1 and len(man["config_hash"]) == 64
    assert set(man["versions"]) >= {"numpy", "scipy", "numba", "heisineq"}


def test_verify_inverted_config_fails(tmp_path):
    assert run("verify", "--config", DATA / "mcp_inverted.toml", "--out", tmp_path / "r") == EXIT_FAIL
    rep = json.loads((tmp_path / "r" / "reports" / "ball-inverted.json").read_text())
    assert rep["pass"] is False and rep["check"].endswith("-inverted")


def test_verify_deterministic(tmp_path):
    for k in (1, 2):
        assert run("verify", "--config", DATA / "small_mcp.toml", "--out", tmp_path / f"r{k}", "--seed", 7) == 0
    a = (tmp_path / "r1" / "reports" / "ball.json").read_bytes()
    assert a == (tmp_path / "r2" / "reports" / "ball.json").read_bytes()


def test_write_once(tmp_path, capsys):
    assert run("verify", "--config", DATA / "small_mcp.toml", "--out", tmp_path) == EXIT_OK
    assert run("verify", "--config", DATA / "small_mcp.toml", "--out", tmp_path) == EXIT_CONFIG
    assert "already holds a run" in capsys.readouterr().err


@pytest.mark.parametrize("text,msg", [
    ("name = 'x'\nbogus = 1\n", "bogus"),
    ("name = 'x'\n[[checks]]\ntype = 'mcp'\nname = 'a'\nx = [0,0,0]\ns = 0.5\n", "set"),
    ("name = 'x'\n[[checks]]\ntype = 'nope'\nname = 'a'\n", "nope"),
    ("name = 'x'\n[[checks]]\ntype = 'mcp'\nname = 'a'\nx = [0,0,0]\ns = 1.5\n"
     "set = { kind = 'cc-ball', center = [1,0,0], size = [0.3] }\n", "s"),
    ("name = 'x'\n[[checks\n", ""),
])
def test_bad_configs_exit_2(tmp_path, capsys, text, msg):
    p = tmp_path / "c.toml"
    p.write_text(text)
    assert run("verify", "--config", p, "--out", tmp_path / "o") == EXIT_CONFIG
    assert msg in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run("verify", "--config", tmp_path / "none.toml", "--out", tmp_path / "o") == EXIT_CONFIG


def test_bundled_configs_load():
    for name in ("mcp_default", "bm_default", "transport_default"):
        cfg, _ = load_config(name)
        assert cfg["checks"]


def test_config_hash_key_order():
    a = {"name": "x", "seed": 1, "checks": [{"type": "mcp", "s": 0.5}]}
    b = {"checks": [{"s": 0.5, "type": "mcp"}], "seed": 1, "name": "x"}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, seed=2))


def test_reproduce_all_subset(tmp_path, capsys):
    out = tmp_path / "suite"
    assert run("reproduce-all", "--only", "2,6", "--out", out) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [l[:20] for l in lines] == ["criterion  2 [PASS] ", "criterion  6 [PASS] "]
    assert sorted(p.name for p in (out / "reports").iterdir()) == ["criterion_02.json", "criterion_06.json"]
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["timings_s"]) == {"2", "6"}


def test_reproduce_all_rejects_unknown(tmp_path):
    assert run("reproduce-all", "--only", "14", "--out", tmp_path / "o") == EXIT_CONFIG
