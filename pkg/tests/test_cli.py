import csv
import json
import math
import subprocess
import sys

import pytest

from sinhgordon import asymptotics as A
from sinhgordon import ProblemParams
from sinhgordon.cli import ConfigError, RunConfig, fmt, main
from sinhgordon.concentration import brute_force_weight, standard_F_suite


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- config -------------------------------------------------------------------

def test_config_round_trip():
    cfg = RunConfig(eps=0.02, eps_list=(0.1, 0.05, 0.02, 0.01), q_grid=(0.0, 0.3))
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@pytest.mark.parametrize("data", [{"bogus": 1}, {"eps": 0.0}, {"N": 1.0}, {"model": "global"},
                                  {"eps_list": [0.1, 0.2, 0.05, 0.01]}, {"mesh_n": 10},
                                  {"curvature": "x"}, {"p_grid": [-1.0]}, {"eps_list": 0.1}])
def test_config_rejected(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_unknown_key_exit_code(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps": 0.02, "colour": "red"}))
    assert run(tmp_path, "solve", "--config", str(cfg)) == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps": 0.02, "a0": 1.0}))
    assert run(tmp_path, "solve", "--config", str(cfg), "--a0", "3", "--mesh-n", "800") == 0
    side = json.loads((tmp_path / "solution.json").read_text())
    assert side["params"]["a0"] == 3.0 and side["params"]["eps"] == 0.02


def test_fmt_shortest_round_trip():
    for x in (0.1, 1 / 3, 1e-300, 2.0**0.5):
        assert float(fmt(x)) == x
    assert fmt(0.1) == "0.1"


# --- solve --------------------------------------------------------------------

def test_solve_writes_csv_and_sidecar(tmp_path):
    assert run(tmp_path, "solve", "--N", "2", "--R", "1", "--gamma", "1", "--a0", "2", "--eps", "0.01",
               "--mesh-n", "1000") == 0
    rows = read_csv(tmp_path / "solution.csv")
    assert list(rows[0]) == ["r", "u", "du", "model"]
    assert len(rows) == 1001
    side = json.loads((tmp_path / "solution.json").read_text())
    assert set(side) >= {"params", "C", "residual", "iters"}
    assert side["residual"] <= 1e-10 * 2


def test_solve_trivial(tmp_path):
    assert run(tmp_path, "solve", "--a0", "0", "--mesh-n", "500") == 0
    rows = read_csv(tmp_path / "solution.csv")
    assert all(float(r["u"]) == 0.0 for r in rows)
    assert json.loads((tmp_path / "solution.json").read_text())["C"] == 1.0


def test_solve_local_model_column(tmp_path):
    assert run(tmp_path, "solve", "--model", "local", "--mesh-n", "500") == 0
    assert {r["model"] for r in read_csv(tmp_path / "solution.csv")} == {"local"}


def test_solve_json_format(tmp_path):
    assert run(tmp_path, "solve", "--format", "json", "--mesh-n", "500") == 0
    side = json.loads((tmp_path / "solution.json").read_text())
    assert len(side["u"]) == 501 and not (tmp_path / "solution.csv").exists()


def test_solver_failure_exit_and_diagnostic(tmp_path):
    assert run(tmp_path, "solve", "--grading", "uniform", "--mesh-n", "400", "--eps", "0.001") == 3
    side = json.loads((tmp_path / "solution.json").read_text())
    assert side["status"] == "failed" and side["required_nodes"] == 200


def test_solve_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--mesh-n", "800", "--out", str(a)]) == 0
    assert main(["solve", "--mesh-n", "800", "--out", str(b)]) == 0
    for name in ("solution.csv", "solution.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# --- expand -------------------------------------------------------------------

def test_expand_grid(tmp_path):
    assert run(tmp_path, "expand", "--p-grid", "0", "1", "--q-grid", "0", "0.5") == 0
    rows = read_csv(tmp_path / "expansion_grid.csv")
    assert list(rows[0]) == ["p", "q", "k_p", "u2", "du2", "v2", "dv2"]
    assert len(rows) == 5   # 2 x 2 grid plus the half-height row
    rep = json.loads((tmp_path / "expansion.json").read_text())
    first = rows[0]
    assert float(first["u2"]) == pytest.approx(rep["uR2"]["value"], rel=1e-14)
    assert float(first["du2"]) == pytest.approx(rep["duR2"]["value"], rel=1e-14)
    assert [g["half_height"] for g in rep["grid"]] == [False] * 4 + [True]
    p = ProblemParams()
    assert float(rows[-1]["du2"]) == pytest.approx(A.half_height_slope(p).value(0.01), rel=1e-12)


def test_expand_trivial(tmp_path):
    assert run(tmp_path, "expand", "--a0", "0") == 0
    for row in read_csv(tmp_path / "expansion_grid.csv"):
        assert all(float(row[k]) == 0.0 for k in ("k_p", "u2", "du2", "v2", "dv2"))


def test_expand_invalid_grid(tmp_path):
    assert run(tmp_path, "expand", "--p-grid", "500") == 2


def test_expand_json_round_trip(tmp_path):
    assert run(tmp_path, "expand") == 0
    text = (tmp_path / "expansion.json").read_text()
    assert json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n" == text


# --- sweep --------------------------------------------------------------------

def test_sweep_default_passes(tmp_path):
    assert run(tmp_path, "sweep") == 0
    out = json.loads((tmp_path / "ratefits.json").read_text())
    assert out["passed"] and out["failures"] == []
    assert out["fits"]["|C-c2|"]["slope"] >= 1.3
    rows = read_csv(tmp_path / out["channels"]["|C-c2|"]["file"])
    assert list(rows[0]) == ["eps", "error"] and len(rows) == 6


def test_sweep_forced_failure(tmp_path):
    assert run(tmp_path, "sweep", "--min-order", "3.0", "--mesh-n", "2000") == 1


def test_sweep_trivial(tmp_path):
    assert run(tmp_path, "sweep", "--a0", "0", "--mesh-n", "1000") == 0
    out = json.loads((tmp_path / "ratefits.json").read_text())
    assert out["trivial"] and all(f["trivial"] for f in out["fits"].values())


def test_sweep_printed_form_fails(tmp_path):
    # the printed curvature placement misses the layer interior; see the decisions ledger
    assert run(tmp_path, "sweep", "--curvature", "leading") == 1
    out = json.loads((tmp_path / "ratefits.json").read_text())
    assert all("[p=0,q=0]" not in f for f in out["failures"])
    assert any("[p=1,q=0]" in f for f in out["failures"])


# --- concentrate / dichotomy --------------------------------------------------

@pytest.fixture(scope="module")
def conc_rows(tmp_path_factory):
    out = tmp_path_factory.mktemp("conc")
    assert main(["concentrate", "--eps-list", "0.02", "0.01", "0.005", "0.0025", "--out", str(out)]) == 0
    return read_csv(out / "concentration.csv")


def test_concentrate_header_and_square_limit(conc_rows):
    assert list(conc_rows[0]) == ["F", "h", "mode", "window", "eps", "empirical", "limit", "relerr"]
    b = A.solve_b(ProblemParams())
    row = next(r for r in conc_rows if r["F"] == "s^2" and r["h"] == "1" and r["mode"] == "gradient"
               and r["window"] == "full")
    assert float(row["limit"]) == pytest.approx(4 * (math.cosh(b / 2) - 1), rel=1e-12)


def test_concentrate_holder_rows_match_brute_force(conc_rows):
    b = A.solve_b(ProblemParams())
    F = standard_F_suite()["|s|^1/2"]
    ref = {"gradient": brute_force_weight(F, b, "i"), "value": brute_force_weight(F, b, "ii")}
    rows = [r for r in conc_rows if r["F"] == "|s|^1/2" and r["h"] == "1" and r["window"] == "full"]
    assert rows
    for r in rows:
        assert float(r["limit"]) == pytest.approx(ref[r["mode"]], abs=1e-8)


def test_concentrate_trivial(tmp_path):
    assert run(tmp_path, "concentrate", "--a0", "0", "--mesh-n", "1000",
               "--eps-list", "0.08", "0.04", "0.02", "0.01") == 0
    for r in read_csv(tmp_path / "concentration.csv"):
        assert float(r["empirical"]) == 0.0 and float(r["limit"]) == 0.0


def test_dichotomy_command(tmp_path):
    assert run(tmp_path, "dichotomy") == 0
    out = json.loads((tmp_path / "dichotomy.json").read_text())
    assert out["passed"] and len(out["interior"]) == 6


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sinhgordon", "expand", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "expansion.json").exists()
