import csv
import json

import pytest

from cli.app import build_parser, flag_overrides, resolve_config, run
from core.presets import PresetLibrary


def _out(tmp_path, name="out"):
    return ["--out", str(tmp_path / name)]


def _read_json(path):
    return json.loads(path.read_text())


def test_usage_errors():
    assert run([]) == 2
    assert run(["solve", "--bogus"]) == 2
    assert run(["solve", "--algo", "bfgs"]) == 2
    assert run(["sweep", "--E-list", "0.1,x"]) == 2


def test_help():
    assert run(["--help"]) == 0


def test_flags_override_preset():
    args = build_parser().parse_args(["solve", "--preset", "linking", "--n", "41", "--multi-start", "3"])
    config = resolve_config(args, PresetLibrary())
    assert config.get("problem", "n") == 41
    assert config.get("problem", "lambda_frac") == "gap:1:0.5"
    assert config.get("solver", "multi_start") == 3
    assert flag_overrides(build_parser().parse_args(["sweep", "--cold"]))["task"] == {"cold": True}


def test_config_file_overrides_flags(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"problem": {"n": 33}}))
    args = build_parser().parse_args(["eig", "--n", "50", "--config", str(path)])
    assert resolve_config(args, PresetLibrary()).get("problem", "n") == 33


def test_unknown_preset(tmp_path):
    assert run(["eig", "--preset", "resonant"] + _out(tmp_path)) == 2


def test_eig(tmp_path, capsys):
    assert run(["eig", "--n", "50", "--count", "4"] + _out(tmp_path)) == 0
    with open(tmp_path / "out" / "eigenvalues.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert abs(float(rows[0]["rel_error"])) < 1e-3
    assert _read_json(tmp_path / "out" / "config.json")["problem"]["n"] == 50
    assert "lambda_i" in capsys.readouterr().out


def test_constants(tmp_path):
    assert run(["constants", "--n", "40", "--E", "0.01"] + _out(tmp_path)) == 0
    document = _read_json(tmp_path / "out" / "constants.json")
    assert document["k"] == 0
    assert document["delta_E"] > 0.0
    assert document["rho_est"] == pytest.approx((2 * 0.01) ** 0.5)


def test_check_assumptions(tmp_path, capsys):
    assert run(["check-assumptions"] + _out(tmp_path)) == 0
    assert _read_json(tmp_path / "out" / "assumptions.json")["passed"] is True
    assert "overall: PASS" in capsys.readouterr().out


def test_check_gradients(tmp_path):
    assert run(["check-gradients", "--n", "40", "--samples", "3"] + _out(tmp_path)) == 0
    with open(tmp_path / "out" / "gradients.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 9


def test_fiber_and_embed(tmp_path):
    assert run(["fiber", "--n", "40", "--t-points", "51"] + _out(tmp_path)) == 0
    with open(tmp_path / "out" / "fiber.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 51
    assert float(rows[-1]["value"]) < -100.0

    assert run(["embed", "--n", "40", "--r", "2"] + _out(tmp_path, "embed")) == 0
    document = _read_json(tmp_path / "embed" / "embed.json")
    assert document["S_r"] == pytest.approx(document["spectral_value"], rel=1e-8)


def test_preconditions_exit_with_2(tmp_path):
    assert run(["solve", "--n", "40", "--E", "100"] + _out(tmp_path, "a")) == 2
    assert run(["solve", "--n", "40", "--k-check", "1"] + _out(tmp_path, "b")) == 2
    assert run(["zero-energy", "--n", "41", "--lambda-frac", "gap:1:0.5"] + _out(tmp_path, "c")) == 2
    assert run(["eig", "--q", "2.5"] + _out(tmp_path, "d")) == 2


def test_solve_is_deterministic(tmp_path):
    argv = ["solve", "--n", "40", "--E", "0.01", "--seed", "3"]
    assert run(argv + _out(tmp_path, "first")) == 0
    assert run(argv + _out(tmp_path, "second")) == 0
    for name in ("solution.json", "profile.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    document = _read_json(tmp_path / "first" / "solution.json")
    assert document["result"]["converged"] is True
    assert document["linking"]["b"] <= 0.0 < document["linking"]["a"]
    assert len(document["u"]) == 40
    with open(tmp_path / "first" / "profile.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 42
    assert float(rows[0]["u"]) == 0.0 and float(rows[-1]["x"]) == 1.0


@pytest.mark.slow
def test_sweep(tmp_path):
    assert run(["sweep", "--n", "40", "--E-list", "0.005,0.01,0.02"] + _out(tmp_path)) == 0
    with open(tmp_path / "out" / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [float(row["E"]) for row in rows] == [0.005, 0.01, 0.02]
    assert all(row["converged"] == "true" for row in rows)
    assert _read_json(tmp_path / "out" / "sweep.json")["monotone"] is True
