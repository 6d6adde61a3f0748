import csv
import json
import math

import numpy as np
import pytest

from qslcontrol.cli import main, parse_grid


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_grid():
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_grid("0.5,1.0") == [0.5, 1.0]
    assert parse_grid("2") == [2.0]
    for bad in ("1:0.5:0.1", "", "a:b:c", "0:1", "0:1:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_bounds_su3(tmp_path):
    assert main(["bounds", "--model", "su3", "--targets", "A,B,C,D", "--phi", "0.05:3.1416:0.05", "--out", str(tmp_path)]) == 0
    tables = {t: _rows(tmp_path / f"bounds_su3_{t}.csv") for t in "ABCD"}
    assert len(tables["A"]) == 62
    for key in ("tau1", "tau2", "tau_unified"):
        a = np.array([float(r[key]) for r in tables["A"]])
        for t in "BD":
            np.testing.assert_allclose([float(r[key]) for r in tables[t]], a, atol=1e-12)
        assert np.abs(np.array([float(r[key]) for r in tables["C"]]) - a).max() > 0.1
    manifest = json.loads((tmp_path / "bounds_su3.manifest.json").read_text())
    assert set(manifest["files"]) == {f"bounds_su3_{t}.csv" for t in "ABCD"}
    assert manifest["config"]["phi"] == "0.05:3.1416:0.05"


def test_bounds_su2_tau_is_phi(tmp_path):
    assert main(["bounds", "--model", "su2", "--targets", "x,z", "--phi", "0.1:3.1:0.3", "--out", str(tmp_path)]) == 0
    for t in "xz":
        for r in _rows(tmp_path / f"bounds_su2_{t}.csv"):
            assert float(r["tau_unified"]) == pytest.approx(float(r["phi"]), abs=1e-12)
    z = _rows(tmp_path / "bounds_su2_z.csv")
    assert float(z[0]["short_time"]) == pytest.approx(math.sqrt(1.2))


def test_bounds_json_format(tmp_path):
    assert main(["bounds", "--model", "su2", "--targets", "x", "--phi", "0.5", "--format", "json", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "bounds_su2_x.json").read_text())
    assert data[0]["tau1"] == pytest.approx(0.5)


def test_usage_errors(tmp_path, capsys):
    assert main(["bounds", "--model", "su2", "--phi", "1:0.5:0.1", "--out", str(tmp_path)]) == 2
    assert main(["bounds", "--model", "su2"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["bounds", "--model", "spinJ", "--phi", "1", "--out", str(tmp_path)]) == 2
    assert main(["bounds", "--model", "su2", "--targets", "q", "--phi", "1", "--out", str(tmp_path)]) == 2


def test_sweep_su2_x(tmp_path):
    args = ["sweep", "--model", "su2", "--target", "x", "--phi", "1.5708", "--seed", "7",
            "--seeds", "5", "--patience", "3", "--out"]
    assert main(args + [str(tmp_path / "a")]) == 0
    assert main(args + [str(tmp_path / "b")]) == 0
    name = "sweep_su2_x_1p5708"
    a = (tmp_path / "a" / f"{name}.json").read_bytes()
    assert a == (tmp_path / "b" / f"{name}.json").read_bytes()
    assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()
    data = json.loads(a)
    assert abs(data["t_min"] - math.pi / 2) <= 0.05
    assert data["bounds"]["tau_unified"] == pytest.approx(1.5708)
    assert set(data) >= {"model", "target", "phi", "threshold", "grid", "t_min", "bounds"}
    assert [g["T"] for g in data["grid"]] == sorted((g["T"] for g in data["grid"]), reverse=True)
    man = json.loads((tmp_path / "a" / f"{name}.manifest.json").read_text())
    assert man["seed"] == 7 and man["version"]


def test_sweep_without_success_warns(tmp_path):
    args = ["sweep", "--model", "su2", "--target", "z", "--phi", "1.0", "--thi", "1.0", "--seeds", "1",
            "--patience", "2", "--out", str(tmp_path)]
    assert main(args) == 0
    data = json.loads((tmp_path / "sweep_su2_z_1.json").read_text())
    assert data["t_min"] is None and "warning" in data


def test_mct_command(tmp_path):
    assert main(["mct", "--model", "su2", "--target", "x", "--phi", "1.0", "--T", "1.2", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "mct_su2_x_1_T1p2.json").read_text())
    assert data["final_infidelity"] <= 1e-6
    assert len(data["field"]["values"]) == 30


def test_lie_command(tmp_path):
    assert main(["lie", "--model", "su3", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "lie_su3.json").read_text())
    assert data["dimension"] == 8 and data["fully_controllable"] is True


def test_classical_command(tmp_path):
    assert main(["classical", "--j", "0.5:50", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "classical.csv")
    taus = [float(r["tau2"]) for r in rows]
    assert len(rows) == 100
    assert all(b < a for a, b in zip(taus, taus[1:]))


def test_verify_command(capsys):
    assert main(["verify", "--seed", "1"]) == 0
    assert "passed" in capsys.readouterr().out


def test_verify_reports_failure(monkeypatch, capsys):
    from qslcontrol import verify

    def broken(rng):
        assert False, "deliberately broken"

    monkeypatch.setattr(verify, "CHECKS", [("broken", broken)])
    assert main(["verify"]) == 1
    assert "FAILED broken: deliberately broken" in capsys.readouterr().out
