import json
from pathlib import Path

import numpy as np
import pytest

from vekua import GridField, make_grid
from vekua.cli import main
from vekua.errors import SpecError
from vekua.io import dumps, load_spec, read_field, read_spec, write_field

SPECS = Path(__file__).resolve().parents[1] / "specs"


def _run(tmp_path, command, spec, *extra):
    out = tmp_path / command
    code = main([command, "--spec", str(SPECS / spec), "--out", str(out), *extra])
    return code, out


def test_dumps_uses_17_digits_and_null():
    text = dumps({"a": 0.1, "b": [1, float("nan")], "c": 1 + 2j})
    data = json.loads(text)
    assert "0.10000000000000001" in text
    assert data == {"a": 0.1, "b": [1, None], "c": [1.0, 2.0]}


def test_field_round_trip_is_exact(tmp_path, disc):
    g = make_grid(disc, 16, [0.1j])
    f = GridField(g, np.exp(g.nodes) / 3)
    write_field(tmp_path / "f.csv", f)
    back = read_field(tmp_path / "f.csv", g)
    assert np.array_equal(back.values, f.values)
    assert (tmp_path / "f.csv").read_text().startswith("x,y,re,im\n")
    assert json.loads((tmp_path / "f.json").read_text())["grid"]


def test_load_spec_forms():
    spec, _ = load_spec({
        "domain": {"shape": "rectangle", "lower": [-1, -1], "upper": [1, 1]},
        "points": [{"location": "0.1 + 0.2i", "p_profile": {"fourier": {"2": [0, 1]}},
                    "q_profile": {"samples": [0.5] * 128}}],
        "A": {"profile_remainder": {"remainder": "z", "background": "0"}},
        "B": [0.5, 0],
        "F": "exp(z)",
    })
    assert spec.points[0].location == 0.1 + 0.2j
    assert spec.B(np.array([0.3j]))[0] == 0.5
    assert spec.F(np.array([0j]))[0] == 1


@pytest.mark.parametrize("bad", [
    {"points": [{"tau": 0.5}]},
    {"points": [{"location": 0, "tau": 1.5}]},
    {"domain": {"shape": "hexagon"}},
    {"B": {"unknown": 1}},
    [1, 2],
])
def test_load_spec_rejects(bad):
    with pytest.raises(SpecError):
        load_spec(bad)


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"domain": {\n  "shape": }\n}')
    with pytest.raises(SpecError, match="line 2"):
        read_spec(p)
    assert main(["solve", "--spec", str(p), "--out", str(tmp_path / "o")]) == 2


def test_usage_errors_exit_2(tmp_path):
    assert main(["bogus", "--spec", "x", "--out", str(tmp_path)]) == 2
    assert main(["solve", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["solve", "--spec", str(SPECS / "pompeiu_disc.json"), "--out", str(tmp_path),
                 "--n", "4"]) == 2


def test_solve_pompeiu(tmp_path):
    code, out = _run(tmp_path, "solve", "pompeiu_disc.json", "--n", "32")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep) <= {"command", "residuals", "norms", "spectrum", "kernel_dim", "orders",
                        "sign_sigma", "seed"}
    assert rep["residuals"]["pde"] <= rep["residuals"]["tolerance"]
    assert (out / "u.csv").exists()


def test_exponents_command(tmp_path):
    code, out = _run(tmp_path, "exponents", "exponents_half.json")
    assert code == 0
    exps = json.loads((out / "report.json").read_text())["spectrum"]["q"]["exponents"]
    assert exps[0] == pytest.approx(0.618034, abs=1e-6)
    assert exps[1] == pytest.approx(1.302776, abs=1e-6)
    assert (out / "profile_q_1_1.csv").read_text().startswith("theta,re,im\n")


def test_reduce_command(tmp_path):
    code, out = _run(tmp_path, "reduce", "manufactured.json", "--n", "24")
    assert code == 0
    for name in ("w", "mu", "B1", "F1"):
        assert (out / f"{name}.csv").exists()


def test_verify_failure_exits_1_with_report(tmp_path):
    code, out = _run(tmp_path, "verify", "bad_condition.json")
    assert code == 1
    rep = json.loads((out / "report.json").read_text())
    assert rep["residuals"]["condition"]["passed"] is False
    assert rep["sign_sigma"] == -1


def test_outputs_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert main(["solve", "--spec", str(SPECS / "manufactured.json"), "--out", str(d),
                     "--n", "24", "--seed", "7"]) == 0
    for name in ("report.json", "u.csv", "u.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
