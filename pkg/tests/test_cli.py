import csv
import math

import numpy as np
import pytest

from bankplan import config as C
from bankplan.cli import main
from bankplan.optimizer import OptimizerConfig


@pytest.fixture()
def ex1_config(tmp_path):
    cfg = C.example1()
    path = tmp_path / "ex1.yaml"
    C.emit(cfg, path)
    return path


def _read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {r["name"]: float(r["value"]) for r in rows}


def test_solve_t0(ex1_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", str(ex1_config), "--out", str(out), "solve-t0"])
    assert code == 0
    text = capsys.readouterr().out
    assert "equity share e = 4.00%" in text
    table = _read_table(out / "stage0.csv")
    assert table["e"] == pytest.approx(0.04, abs=1e-6)
    assert table["objective"] == pytest.approx(0.10648736, abs=1e-6)
    assert "slack_risk_cap" in table


def test_solve_t1_bankrupt_node(ex1_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", str(ex1_config), "--out", str(out),
                 "solve-t1", "--node", "3"])
    assert code == 0
    assert "BANKRUPT" in capsys.readouterr().out
    table = _read_table(out / "node3.csv")
    assert table["bankrupt"] == 1.0
    assert table["min_equity_needed"] == pytest.approx(0.0791487, abs=5e-4)


def test_bounds_subcommand(ex1_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", str(ex1_config), "--out", str(out),
                 "bounds", "--node", "2"])
    assert code == 0
    assert "verified = True" in capsys.readouterr().out
    table = _read_table(out / "bounds_node2.csv")
    assert table["cap_vd_leverage_verified"] == 1.0


def test_curves_affine_and_monotone(ex1_config, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(ex1_config), "--out", str(out),
                 "curves", "--node", "1"]) == 0
    with open(out / "curves_node1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    vd = np.array([float(r["v_d"]) for r in rows])
    v_eq = np.array([float(r["v_equity_vs_vd"]) for r in rows])
    lev_vd = np.array([float(r["leverage_vs_vd"]) for r in rows])
    # the equity-return series in v_d is affine with the predicted slope
    slope, intercept = np.polyfit(vd, v_eq, 1)
    cfg = C.example1()
    predicted = (1 - cfg.params.phi_d - 1 / (1 + cfg.params.r)) / 0.04
    assert slope == pytest.approx(predicted, rel=1e-9)
    residual = v_eq - (slope * vd + intercept)
    assert np.max(np.abs(residual)) < 1e-10
    # debt issuance erodes the leverage ratio at a surviving node
    assert np.all(np.diff(lev_vd) < 0.0)


def test_curves_single_row(tmp_path):
    cfg = C.example1()
    from dataclasses import replace
    cfg = replace(cfg, curve_points=1)
    path = tmp_path / "one.yaml"
    C.emit(cfg, path)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out),
                 "curves", "--node", "2"]) == 0
    with open(out / "curves_node2.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1


def test_pipeline_writes_everything(ex1_config, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(ex1_config), "--out", str(out),
                 "pipeline"]) == 0
    expected = {"stage0.csv"}
    expected |= {f"node{n}.csv" for n in (1, 2, 3)}
    expected |= {f"bounds_node{n}.csv" for n in (1, 2, 3)}
    expected |= {f"curves_node{n}.csv" for n in (1, 2, 3)}
    assert expected <= {p.name for p in out.iterdir()}


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: broken\nloans: []\n")
    assert main(["--config", str(bad), "--out", str(tmp_path / "o"),
                 "solve-t0"]) == 1
    assert "config error" in capsys.readouterr().err


def test_exit_code_infeasible_stage0(tmp_path, capsys):
    from dataclasses import replace
    cfg = C.example1()
    # a leverage floor above 1 makes any equity share insufficient
    cfg = replace(cfg, params=replace(cfg.params, k_lev=1.5),
                  optimizer=OptimizerConfig(seed=0, generations=5))
    path = tmp_path / "hard.yaml"
    C.emit(cfg, path)
    assert main(["--config", str(path), "--out", str(tmp_path / "o"),
                 "solve-t0"]) == 2
    assert "infeasible" in capsys.readouterr().err


def test_seed_flag_overrides(ex1_config, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(ex1_config), "--out", str(out),
                 "--seed", "9", "solve-t0"]) == 0
