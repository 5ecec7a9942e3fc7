import json

import pytest

from vrrjump.engine.play import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, EXIT_SIMULATION, main


def _config(tmp_path, doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


FAST = {
    "leg": {"jacobian_mode": "hip"},
    "sim": {"dt_s": 0.001},
    "angles_rad": [-2.618],
}


def test_envelope(tmp_path, capsys):
    assert main(["envelope", "--out", str(tmp_path), "--n", "11"]) == EXIT_OK
    lines = (tmp_path / "envelope.csv").read_text().splitlines()
    assert lines[0] == "omega_rpm,tau_max_nm,p_out_w,p_loss_w"
    assert len(lines) == 12
    summary = json.loads(capsys.readouterr().out)
    assert summary["n"] == 11


def test_simulate_prints_summary(tmp_path, capsys):
    assert main(["simulate", "--config", _config(tmp_path, FAST), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["terminated_by"] == "AngleCap"
    assert summary["h_jump"] > 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t_s,q2_rad,dq2_rads,theta_rad,k,lambda_radpm")
    assert (tmp_path / "metadata.json").exists()
    assert (tmp_path / "config.json").exists()


def test_sweep_ratio(tmp_path, capsys):
    assert main(["sweep-ratio", "--out", str(tmp_path), "--q2-lo", "-2.6", "--q2-hi", "-0.1", "--n", "101"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["argmax_q2"] == pytest.approx(summary["argmax_q2_closed_form"], abs=1e-4)
    assert len((tmp_path / "ratio_curve.csv").read_text().splitlines()) == 102


def test_optimize_frr_dumps_grid(tmp_path, capsys):
    doc = dict(FAST, search={"k_fixed": [20, 24, 2]})
    args = ["optimize", "--joint", "frr", "--dump-grid", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["evaluated"] == 3
    assert len((tmp_path / "grid_frr.csv").read_text().splitlines()) == 4


def test_jacobian_mode_flag(tmp_path, capsys):
    # the literal-Jacobian leg cannot leave the crouch stop at this depth
    doc = dict(FAST, sim={"dt_s": 0.001, "t_max_s": 0.05})
    args = ["simulate", "--config", _config(tmp_path, doc), "--out", str(tmp_path), "--jacobian-mode", "paper"]
    assert main(args) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["terminated_by"] == "Timeout"


def test_config_errors(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["simulate", "--config", _config(tmp_path, {"leg": {"l3_m": 1}})]) == EXIT_CONFIG
    assert main(["envelope", "--workers", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_usage_errors():
    assert main(["simulate", "--seedless=1"]) == EXIT_CONFIG
    assert main(["launch"]) == EXIT_CONFIG
    assert main(["simulate", "--jacobian-mode", "exact"]) == EXIT_CONFIG


def test_sweep_needs_linkage(tmp_path):
    doc = {"mechanism": {"type": "frr"}}
    assert main(["sweep-ratio", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_infeasible_search(tmp_path):
    doc = dict(FAST, search={"r_mm": [47, 47, 1], "s0_mm": [150, 150, 5], "dtheta_deg": [-3, -3, 1]})
    assert main(["optimize", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_INFEASIBLE


def test_simulation_error(tmp_path):
    doc = dict(FAST, sim={"dt_s": 0.001, "takeoff_rule": "contact_force_zero"})
    assert main(["simulate", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_SIMULATION
