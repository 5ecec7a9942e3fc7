import csv
import io
import json
import math
from pathlib import Path

import pytest

from vrrjump.errors import ConfigError
from vrrjump.engine.models.kinematics import JacobianMode, LegModel
from vrrjump.engine.models.mechanism import VrrParams, ratio_curve
from vrrjump.engine.models.motor import default_motor, envelope_table
from vrrjump.engine.optimizer import ComparisonReport, SearchBox, compare_designs
from vrrjump.engine.sim import SimConfig, TakeoffRule
from vrrjump.engine.storage import (
    ENVELOPE_COLUMNS,
    RATIO_COLUMNS,
    TRAJECTORY_COLUMNS,
    bundled_config_path,
    dump_config,
    emit_report,
    load_config,
    load_config_document,
    write_envelope_csv,
    write_ratio_curve_csv,
    write_trajectory_csv,
)
from vrrjump.engine.utils import config_hash, fmt_num, grid_axis
from vrrjump.engine.workbook import read_summary_workbook


@pytest.fixture(scope="module")
def report():
    leg = LegModel.uniform(0.45, 0.45, 2.5, 5.0, 20.0, jacobian_mode="hip")
    box = SearchBox(
        r_range=(0.047, 0.047, 0.001),
        s0_range=(0.150, 0.150, 0.005),
        dtheta_range=(0.0, 0.0, 0.01),
        frr_range=(21.0, 22.0, 1.0),
    )
    cfg = SimConfig(q2_init=-2.618, dt=1e-3)
    return compare_designs(leg, default_motor(), cfg, box, [-2.2689, -2.618], curve_samples=20)


def _write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


# =============================
# CONFIG
# =============================
def test_bundled_reference_config():
    run = load_config(bundled_config_path())
    assert run.leg.jacobian_mode is JacobianMode.HIP
    assert run.leg.total_mass() == pytest.approx(27.5)
    assert run.motor.tau_peak == 9.37
    assert run.motor.k_t == pytest.approx(9.37 / 92.0)
    assert run.mechanism == VrrParams(r=0.047, S0=0.150)
    assert run.angles == (-2.618, -2.2689, -1.9199)
    assert run.sim.q2_init == -2.618
    assert run.sim.takeoff_rule is TakeoffRule.EITHER
    assert run.output_dir == Path("output/paper_iv_b")
    assert len(run.search.r_values()) == 51
    assert len(run.search.s0_values()) == 31
    assert len(run.search.dtheta_values()) == 7
    assert len(run.search.k_values()) == 31
    assert run.search.dead_length == pytest.approx(0.072)
    assert run.search.q2_flex == -2.618
    assert run.search.standing_reach is True


def test_bundled_platform_config():
    run = load_config(bundled_config_path("single_joint_platform.json"))
    assert run.leg.total_mass() == pytest.approx(24.93)
    assert run.leg.a1 == pytest.approx(0.21)
    assert run.mechanism == VrrParams(r=0.047, S0=0.259)


def test_empty_document_takes_defaults():
    run = load_config_document({})
    assert run.leg.jacobian_mode is JacobianMode.PAPER
    assert run.sim.q2_init == -2.618
    assert run.source["motor"]["omega_hpl_rpm"] == pytest.approx(2592.0)
    assert run.search.q2_flex == min(run.angles)
    assert run.search.dead_length == pytest.approx(0.072)


def test_round_trip_through_dump(tmp_path):
    run = load_config(bundled_config_path())
    reloaded = load_config(dump_config(run, tmp_path / "resolved.json"))
    assert reloaded == run
    assert config_hash(reloaded.source) == config_hash(run.source)


def test_overrides(tmp_path):
    run = load_config(bundled_config_path(), {"output_dir": str(tmp_path), "leg.jacobian_mode": "paper", "sim.dt_s": None})
    assert run.output_dir == tmp_path
    assert run.leg.jacobian_mode is JacobianMode.PAPER
    assert run.sim.dt == 1e-4


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, {"leg": {"l3_m": 0.4}}))
    assert exc.value.key == "leg.l3_m"
    with pytest.raises(ConfigError) as exc:
        load_config_document({"legs": {}})
    assert exc.value.key == "legs"


def test_syntax_error_has_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "leg": }\n', encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


@pytest.mark.parametrize(
    "doc",
    [
        {"leg": {"m1_kg": True}},
        {"leg": {"m1_kg": "2.5"}},
        {"leg": {"m1_kg": -1.0}},
        {"leg": {"jacobian_mode": "exact"}},
        {"mechanism": {"type": "frr", "k_fixed": 0}},
        {"mechanism": {"type": "belt"}},
        {"motor": {"tau_peak_nm": 0.0}},
        {"motor": {"omega_break_rpm": 3000.0}},
        {"sim": {"dt_s": 0.0}},
        {"sim": {"takeoff_rule": "whenever"}},
        {"search": {"r_mm": [25, 75]}},
        {"search": {"r_mm": [75, 25, 1]}},
        {"search": {"standing_reach": 1}},
        {"search": {"dead_length_mm": -1.0}},
        {"search": {"q2_flex_rad": 0.5}},
        {"angles_rad": []},
        {"angles_rad": [-0.01]},
        {"leg": {"q2_cap_rad": -0.1}, "sim": {"q2_takeoff_cap_rad": -0.05}},
        {"leg": []},
    ],
)
def test_invalid_documents(doc):
    with pytest.raises(ConfigError):
        load_config_document(doc)


# =============================
# CSV
# =============================
def test_fmt_num():
    assert fmt_num(1 / 3) == "0.333333333"
    assert fmt_num(1234567890.123) == "1.23456789e+09"
    assert fmt_num(True) == "1"
    assert fmt_num(math.nan) == "nan"
    assert fmt_num(7) == "7"


def test_grid_axis_inclusive():
    assert grid_axis(25.0, 75.0, 1.0)[-1] == 75.0
    assert len(grid_axis(0.025, 0.075, 0.001)) == 51
    with pytest.raises(ValueError):
        grid_axis(1.0, 0.0, 0.1)


def test_trajectory_csv_columns(report):
    buf = io.StringIO()
    traj = report.details[-2.618].vrr.best_run.trajectory
    write_trajectory_csv(traj, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == TRAJECTORY_COLUMNS
    assert len(rows) == len(traj) + 1
    assert float(rows[-1][1]) == pytest.approx(-0.05)


def test_ratio_and_envelope_csv():
    buf = io.StringIO()
    write_ratio_curve_csv(ratio_curve(VrrParams(r=0.047, S0=0.150), -2.618, -0.05, 11), buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == RATIO_COLUMNS
    assert len(rows) == 12
    assert float(rows[1][1]) == pytest.approx(-2.618 + math.pi, rel=1e-8)

    buf = io.StringIO()
    write_envelope_csv(envelope_table(default_motor(), 5), buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ENVELOPE_COLUMNS
    assert float(rows[-1][0]) == pytest.approx(4800.0)


# =============================
# REPORT
# =============================
def test_emit_report(report, tmp_path):
    run = load_config(bundled_config_path())
    manifest = emit_report(report, tmp_path, run, dump_grid=True)
    names = {p.name for p in manifest}
    for name in ("summary.csv", "summary.txt", "summary.json", "summary.xlsx", "metadata.json", "config.json"):
        assert name in names
    assert "trajectory_evrr_m2p6180.csv" in names
    assert "fig7_m2p2689.csv" in names
    assert "grid_frr_m2p6180.csv" in names
    assert all(p.exists() for p in manifest)

    with open(tmp_path / "summary.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["joint"] for r in rows] == ["EVRR", "EVRR", "FRR", "FRR"]
    assert float(rows[0]["angle_rad"]) == -2.618

    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["config_hash"] == config_hash(run.source)
    assert load_config(tmp_path / "metadata.json") == run
    assert load_config(tmp_path / "config.json") == run
    assert "timestamp" in meta and meta["failures"] == {}

    book = read_summary_workbook(tmp_path / "summary.xlsx")
    assert len(book) == 4
    assert book[2]["joint"] == "FRR"
    assert book[0]["r_mm"] == pytest.approx(47.0)


def test_emit_report_is_repeatable(report, tmp_path):
    emit_report(report, tmp_path / "a")
    emit_report(report, tmp_path / "b")
    for name in ("summary.csv", "summary.json", "trajectory_frr_m2p6180.csv", "ratio_curve_m2p2689.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_report_writes_metadata_only(tmp_path):
    manifest = emit_report(ComparisonReport(), tmp_path)
    assert manifest == [tmp_path / "metadata.json"]


def test_validation_error_names_the_type():
    with pytest.raises(ConfigError) as exc:
        load_config_document({"mechanism": {"r_mm": -5}})
    assert exc.value.key == "mechanism"
    assert "VrrParams" in str(exc.value)
