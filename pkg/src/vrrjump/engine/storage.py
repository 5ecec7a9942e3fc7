from __future__ import annotations

import copy
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Any, Iterable, List, Mapping, Sequence, Union

from .. import __version__, config
from ..errors import ConfigError, DomainError
from .models.kinematics import LegModel
from .models.mechanism import FrrParams, Mechanism, RatioCurve, VrrParams, crank_angle
from .models.motor import EnvelopePoint, MotorParams
from .optimizer import ComparisonReport, Evaluation, SearchBox
from .sim import SimConfig, SimState
from .utils import (
    config_hash,
    deg_to_rad,
    fmt_num,
    m_to_mm,
    mm_to_m,
    rad_to_deg,
    rads_to_rpm,
    rpm_to_rads,
)
from .workbook import write_summary_workbook

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    "t_s", "q2_rad", "dq2_rads", "theta_rad", "k", "lambda_radpm", "tau_m_nm", "tau_j_nm",
    "omega_m_rpm", "p_m_w", "p_j_w", "y_com_m", "dy_com_mps", "f_contact_n", "w_motor_j",
]
RATIO_COLUMNS = ["q2_rad", "theta_rad", "k"]
ENVELOPE_COLUMNS = ["omega_rpm", "tau_max_nm", "p_out_w", "p_loss_w"]
GRID_COLUMNS = ["r_mm", "s0_mm", "dtheta_deg", "k_fixed", "feasible", "w_takeoff_j", "h_jump_m"]
SUMMARY_COLUMNS = [
    "joint", "angle_rad", "r_mm", "s0_mm", "dtheta_deg", "k_fixed", "w_takeoff_j", "h_jump_m", "improvement_pct",
]
FIG7_COLUMNS = ["joint", "q2_rad", "k", "overall_ratio_radpm", "w_motor_j", "p_m_w", "omega_m_rpm"]

Target = Union[str, Path, IO[str]]


# =============================
# RUN CONFIG
# =============================
@dataclass(frozen=True)
class RunConfig:
    leg: LegModel
    motor: MotorParams
    mechanism: Mechanism
    sim: SimConfig
    search: SearchBox
    output_dir: Path
    angles: tuple
    # resolved document (human units, defaults filled); echoed into run metadata
    source: dict = field(default_factory=dict, compare=False, repr=False)


SCHEMA = {
    "leg": {"l1_m", "l2_m", "a1_m", "a2_m", "m1_kg", "m2_kg", "m3_kg", "g_mps2", "jacobian_mode", "q2_cap_rad"},
    "motor": {
        "tau_peak_nm", "i_q_peak_a", "k_t_nm_per_a", "p_peak_w", "omega_break_rpm", "omega_max_rpm",
        "omega_hpl_rpm", "r_phase_ohm", "c_iron1", "c_iron2", "eta_j",
    },
    "mechanism": {"type", "r_mm", "s0_mm", "dtheta_deg", "lead_mm", "k_fixed"},
    "sim": {"q2_init_rad", "dt_s", "t_max_s", "q2_takeoff_cap_rad", "takeoff_rule"},
    "search": {"r_mm", "s0_mm", "dtheta_deg", "k_fixed", "dead_length_mm", "q2_flex_rad", "standing_reach"},
}
TOP_LEVEL = set(SCHEMA) | {"angles_rad", "output_dir"}
CONFIG_FILE = "config.json"
BUNDLED_CONFIG = "paper_iv_b.json"


def _check_keys(doc: Mapping, allowed: set, prefix: str = ""):
    for key in doc:
        if key not in allowed:
            dotted = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", key=dotted)


def _section(raw: Mapping, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError("section must be a JSON object", key=name)
    _check_keys(value, SCHEMA[name], name)
    return dict(value)


def _num(doc: Mapping, key: str, prefix: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", key=f"{prefix}.{key}")
    return float(value)


def _flag(doc: Mapping, key: str, prefix: str) -> bool:
    value = doc[key]
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", key=f"{prefix}.{key}")
    return value


def resolve_document(raw: Mapping[str, Any]) -> dict:
    """Fill omitted fields with the reference defaults, keeping human units."""
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    _check_keys(raw, TOP_LEVEL)

    leg = _section(raw, "leg")
    leg.setdefault("l1_m", config.LEG_L1_M)
    leg.setdefault("l2_m", config.LEG_L2_M)
    l1, l2 = _num(leg, "l1_m", "leg"), _num(leg, "l2_m", "leg")
    # uniform links: CoM at mid-length
    leg.setdefault("a1_m", l1 / 2)
    leg.setdefault("a2_m", l2 / 2)
    leg.setdefault("m1_kg", config.LEG_M1_KG)
    leg.setdefault("m2_kg", config.LEG_M2_KG)
    leg.setdefault("m3_kg", config.LEG_M3_KG)
    leg.setdefault("g_mps2", config.GRAVITY)
    leg.setdefault("jacobian_mode", config.JACOBIAN_MODE)
    leg.setdefault("q2_cap_rad", config.Q2_CAP_RAD)

    motor = _section(raw, "motor")
    motor.setdefault("tau_peak_nm", config.TAU_PEAK_NM)
    motor.setdefault("i_q_peak_a", config.I_Q_PEAK_A)
    motor.setdefault("p_peak_w", config.P_PEAK_W)
    motor.setdefault("omega_max_rpm", config.OMEGA_MAX_RPM)
    tau, i_q = _num(motor, "tau_peak_nm", "motor"), _num(motor, "i_q_peak_a", "motor")
    p_peak, w_max = _num(motor, "p_peak_w", "motor"), _num(motor, "omega_max_rpm", "motor")
    if tau > 0 and i_q > 0:
        motor.setdefault("k_t_nm_per_a", tau / i_q)
        motor.setdefault("omega_break_rpm", rads_to_rpm(p_peak / tau))
    motor.setdefault("omega_hpl_rpm", config.HPL_FRACTION * w_max)
    motor.setdefault("r_phase_ohm", config.R_PHASE_OHM)
    motor.setdefault("c_iron1", config.C_IRON1)
    motor.setdefault("c_iron2", config.C_IRON2)
    motor.setdefault("eta_j", config.ETA_J)

    mech = _section(raw, "mechanism")
    mech.setdefault("type", "vrr")
    mech.setdefault("r_mm", config.VRR_R_MM)
    mech.setdefault("s0_mm", config.VRR_S0_MM)
    mech.setdefault("dtheta_deg", config.VRR_DTHETA_DEG)
    mech.setdefault("lead_mm", config.LEAD_MM)
    mech.setdefault("k_fixed", config.FRR_K)

    angles = raw.get("angles_rad", list(config.TABLE_ANGLES_RAD))
    if not isinstance(angles, list) or not angles:
        raise ConfigError("at least one initial angle is required", key="angles_rad")

    sim = _section(raw, "sim")
    sim.setdefault("q2_init_rad", angles[0])
    sim.setdefault("dt_s", config.DT_S)
    sim.setdefault("t_max_s", config.T_MAX_S)
    sim.setdefault("q2_takeoff_cap_rad", config.Q2_TAKEOFF_CAP_RAD)
    sim.setdefault("takeoff_rule", config.TAKEOFF_RULE)

    search = _section(raw, "search")
    search.setdefault("r_mm", list(config.SEARCH_R_MM))
    search.setdefault("s0_mm", list(config.SEARCH_S0_MM))
    search.setdefault("dtheta_deg", list(config.SEARCH_DTHETA_DEG))
    search.setdefault("k_fixed", list(config.SEARCH_K_FIXED))
    search.setdefault("dead_length_mm", config.DEAD_LENGTH_MM)
    # deepest configured crouch sizes the actuator
    numeric = [a for a in angles if isinstance(a, (int, float)) and not isinstance(a, bool)]
    search.setdefault("q2_flex_rad", min(numeric) if numeric else None)
    search.setdefault("standing_reach", config.STANDING_REACH)

    return {
        "leg": leg,
        "motor": motor,
        "mechanism": mech,
        "sim": sim,
        "search": search,
        "angles_rad": list(angles),
        "output_dir": str(raw.get("output_dir", str(config.OUTPUT_DIR))),
    }


def _range(doc: Mapping, key: str, scale) -> tuple:
    value = doc[key]
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError("expected [min, max, step]", key=f"search.{key}")
    lo, hi, step = (_num({key: v}, key, "search") for v in value)
    return scale(lo), scale(hi), scale(step)


def build_run_config(doc: Mapping[str, Any]) -> RunConfig:
    """Convert a resolved document (human units) into validated SI objects."""
    section = "leg"
    try:
        leg_doc = doc["leg"]
        leg = LegModel(
            l1=_num(leg_doc, "l1_m", section),
            l2=_num(leg_doc, "l2_m", section),
            a1=_num(leg_doc, "a1_m", section),
            a2=_num(leg_doc, "a2_m", section),
            m1=_num(leg_doc, "m1_kg", section),
            m2=_num(leg_doc, "m2_kg", section),
            m3=_num(leg_doc, "m3_kg", section),
            g=_num(leg_doc, "g_mps2", section),
            jacobian_mode=leg_doc["jacobian_mode"],
            q2_cap=_num(leg_doc, "q2_cap_rad", section),
        )

        section = "motor"
        md = doc["motor"]
        for key in ("k_t_nm_per_a", "omega_break_rpm"):
            if key not in md:
                raise ConfigError("required when tau_peak_nm is not positive", key=f"motor.{key}")
        motor = MotorParams(
            tau_peak=_num(md, "tau_peak_nm", section),
            i_q_peak=_num(md, "i_q_peak_a", section),
            k_t=_num(md, "k_t_nm_per_a", section),
            p_peak=_num(md, "p_peak_w", section),
            omega_break=rpm_to_rads(_num(md, "omega_break_rpm", section)),
            omega_max=rpm_to_rads(_num(md, "omega_max_rpm", section)),
            omega_hpl=rpm_to_rads(_num(md, "omega_hpl_rpm", section)),
            r_phase=_num(md, "r_phase_ohm", section),
            c_iron1=_num(md, "c_iron1", section),
            c_iron2=_num(md, "c_iron2", section),
            eta_j=_num(md, "eta_j", section),
        )
        motor.check_consistency()

        section = "mechanism"
        mech_doc = doc["mechanism"]
        kind = str(mech_doc["type"]).strip().lower()
        if kind == "vrr":
            mechanism: Mechanism = VrrParams(
                r=mm_to_m(_num(mech_doc, "r_mm", section)),
                S0=mm_to_m(_num(mech_doc, "s0_mm", section)),
                delta_theta=deg_to_rad(_num(mech_doc, "dtheta_deg", section)),
                Q=mm_to_m(_num(mech_doc, "lead_mm", section)),
            )
        elif kind == "frr":
            k_fixed = _num(mech_doc, "k_fixed", section)
            if k_fixed <= 0:
                raise DomainError(f"FrrParams: k_fixed must be > 0 (k_fixed={k_fixed})")
            mechanism = FrrParams(k_fixed=k_fixed)
        else:
            raise ConfigError(f"expected 'vrr' or 'frr', got {kind!r}", key="mechanism.type")

        section = "sim"
        sd = doc["sim"]
        sim = SimConfig(
            q2_init=_num(sd, "q2_init_rad", section),
            dt=_num(sd, "dt_s", section),
            t_max=_num(sd, "t_max_s", section),
            q2_takeoff_cap=_num(sd, "q2_takeoff_cap_rad", section),
            takeoff_rule=sd["takeoff_rule"],
        )
        if sim.q2_takeoff_cap > leg.q2_cap:
            raise DomainError(f"q2_takeoff_cap_rad {sim.q2_takeoff_cap} exceeds leg.q2_cap_rad {leg.q2_cap}")

        section = "search"
        sdoc = doc["search"]
        search = SearchBox(
            r_range=_range(sdoc, "r_mm", mm_to_m),
            s0_range=_range(sdoc, "s0_mm", mm_to_m),
            dtheta_range=_range(sdoc, "dtheta_deg", deg_to_rad),
            frr_range=_range(sdoc, "k_fixed", float),
            dead_length=mm_to_m(_num(sdoc, "dead_length_mm", section)),
            q2_flex=None if sdoc["q2_flex_rad"] is None else _num(sdoc, "q2_flex_rad", section),
            standing_reach=_flag(sdoc, "standing_reach", section),
        )

        section = "angles_rad"
        angles = tuple(_num({"a": a}, "a", section) for a in doc["angles_rad"])
        for a in angles:
            if not (-math.pi <= a < sim.q2_takeoff_cap):
                raise DomainError(f"initial angle {a} outside [-pi, q2_takeoff_cap)")
    except ConfigError:
        raise
    except (DomainError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"invalid value: {e}", key=section) from e

    return RunConfig(
        leg=leg,
        motor=motor,
        mechanism=mechanism,
        sim=sim,
        search=search,
        output_dir=Path(doc["output_dir"]),
        angles=angles,
        source=copy.deepcopy(dict(doc)),
    )


def _apply_overrides(raw: dict, overrides: Mapping[str, Any] | None) -> dict:
    raw = copy.deepcopy(raw)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        parts = dotted.split(".")
        node = raw
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return raw


def _unwrap_metadata(raw):
    # metadata.json carries the resolved document under "config"
    if isinstance(raw, dict) and "tool_version" in raw and isinstance(raw.get("config"), dict):
        return raw["config"]
    return raw


def load_config_document(raw: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Build a RunConfig from a config document or an emitted metadata.json."""
    raw = _unwrap_metadata(raw)
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    return build_run_config(resolve_document(_apply_overrides(raw, overrides)))


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Parse, default, unit-convert and validate a JSON run configuration."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e.msg}", line=e.lineno, column=e.colno) from e

    run = load_config_document(raw, overrides)
    logger.info("[Config] Loaded %s (hash %s)", path, config_hash(run.source)[:12])
    return run


def bundled_config_path(name: str = BUNDLED_CONFIG) -> Path:
    return config.DATA_DIR / name


# =============================
# CSV WRITERS
# =============================
def _write_csv(target: Target, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    def _emit(f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt_num(v) for v in row])

    if hasattr(target, "write"):
        _emit(target)
        return
    try:
        with open(target, "w", encoding="utf-8", newline="") as f:
            _emit(f)
    except OSError as e:
        raise OSError(f"cannot write {target}: {e}") from e


def trajectory_rows(trajectory: Sequence[SimState]):
    for s in trajectory:
        yield (
            s.t, s.q2, s.dq2, s.theta, s.k, s.lam, s.tau_m, s.tau_j, rads_to_rpm(s.omega_m),
            s.p_m, s.p_j, s.y_com, s.dy_com, s.f_contact, s.w_motor,
        )


def write_trajectory_csv(trajectory: Sequence[SimState], target: Target) -> None:
    _write_csv(target, TRAJECTORY_COLUMNS, trajectory_rows(trajectory))


def write_ratio_curve_csv(curve: RatioCurve, target: Target) -> None:
    rows = ((q, crank_angle(curve.params, q), k) for q, k in curve.samples)
    _write_csv(target, RATIO_COLUMNS, rows)


def write_envelope_csv(points: Sequence[EnvelopePoint], target: Target) -> None:
    rows = ((rads_to_rpm(p.omega), p.tau_max, p.p_out, p.p_loss) for p in points)
    _write_csv(target, ENVELOPE_COLUMNS, rows)


def grid_rows(evaluations: Sequence[Evaluation]):
    for ev in evaluations:
        if ev.kind == "vrr":
            r, s0, dth = ev.point
            yield (m_to_mm(r), m_to_mm(s0), rad_to_deg(dth), math.nan, ev.feasible, ev.w_takeoff, ev.h_jump)
        else:
            yield (math.nan, math.nan, math.nan, ev.point[0], ev.feasible, ev.w_takeoff, ev.h_jump)


def write_grid_csv(evaluations: Sequence[Evaluation], target: Target) -> None:
    _write_csv(target, GRID_COLUMNS, grid_rows(evaluations))


def fig7_rows(joint: str, trajectory: Sequence[SimState]):
    for s in trajectory:
        yield (joint, s.q2, s.k, s.k * s.lam, s.w_motor, s.p_m, rads_to_rpm(s.omega_m))


def summary_rows(report: ComparisonReport):
    for row in report.rows:
        p = row.vrr_params
        yield ("EVRR", row.angle, m_to_mm(p.r), m_to_mm(p.S0), rad_to_deg(p.delta_theta), math.nan,
               row.w_vrr, row.h_vrr, row.improvement_pct)
    for row in report.rows:
        yield ("FRR", row.angle, math.nan, math.nan, math.nan, row.frr_k, row.w_frr, row.h_frr, math.nan)


def summary_text(report: ComparisonReport) -> str:
    lines = [
        f"{'Joint':<6} {'Angle (rad)':>11}  {'Parameters (r,S0,dtheta) / k':<30} {'H (m)':>8}",
        "-" * 60,
    ]
    for row in report.rows:
        p = row.vrr_params
        params = f"({m_to_mm(p.r):g}, {m_to_mm(p.S0):g}, {rad_to_deg(p.delta_theta):g})"
        lines.append(f"{'EVRR':<6} {row.angle:>11.4f}  {params:<30} {row.h_vrr:>8.4f}")
    for row in report.rows:
        lines.append(f"{'FRR':<6} {row.angle:>11.4f}  {row.frr_k:<30g} {row.h_frr:>8.4f}")
    lines.append("-" * 60)
    for row in report.rows:
        lines.append(f"improvement at {row.angle:.4f} rad: {row.improvement_pct:.1f}%")
    for angle, msg in report.failures.items():
        lines.append(f"FAILED at {angle:.4f} rad: {msg}")
    return "\n".join(lines) + "\n"


def _json_number(value: float):
    return None if value is None or (isinstance(value, float) and not math.isfinite(value)) else value


def summary_document(report: ComparisonReport) -> dict:
    return {
        "rows": [
            {
                "angle_rad": row.angle,
                "vrr": {
                    "r_mm": m_to_mm(row.vrr_params.r),
                    "s0_mm": m_to_mm(row.vrr_params.S0),
                    "dtheta_deg": rad_to_deg(row.vrr_params.delta_theta),
                    "w_takeoff_j": row.w_vrr,
                    "h_jump_m": row.h_vrr,
                },
                "frr": {"k_fixed": row.frr_k, "w_takeoff_j": row.w_frr, "h_jump_m": row.h_frr},
                "improvement_pct": _json_number(row.improvement_pct),
            }
            for row in report.rows
        ],
        "failures": {str(angle): msg for angle, msg in report.failures.items()},
    }


def convert_paths(obj):
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {k: convert_paths(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [convert_paths(x) for x in obj]
    return obj


def write_json(path: Path, document: dict) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(convert_paths(document), f, ensure_ascii=False, indent=2, sort_keys=False)
            f.write("\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def run_metadata(run: RunConfig | None, wall_time_s: float | None = None, extra: Mapping | None = None) -> dict:
    meta = {
        "tool_version": __version__,
        "timestamp": datetime.now().isoformat(timespec="seconds"),
    }
    if run is not None:
        meta["config_hash"] = config_hash(run.source)
        meta["config"] = run.source
    if wall_time_s is not None:
        meta["wall_time_s"] = wall_time_s
    if extra:
        meta.update(extra)
    return meta


def emit_report(
    report: ComparisonReport,
    out_dir: str | Path,
    run: RunConfig | None = None,
    dump_grid: bool = False,
) -> List[Path]:
    """Write summary tables, per-optimum channels and metadata; return the manifest."""
    out_dir = Path(out_dir)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir}: {e}") from e

    manifest: List[Path] = []

    if report.rows:
        path = out_dir / "summary.csv"
        _write_csv(path, SUMMARY_COLUMNS, summary_rows(report))
        manifest.append(path)

        path = out_dir / "summary.txt"
        with open(path, "w", encoding="utf-8") as f:
            f.write(summary_text(report))
        manifest.append(path)

        path = out_dir / "summary.json"
        write_json(path, summary_document(report))
        manifest.append(path)

        path = out_dir / "summary.xlsx"
        write_summary_workbook(report, path)
        manifest.append(path)

        for row in report.rows:
            detail = report.details[row.angle]
            tag = config.sanitize_filename(f"{row.angle:.4f}")

            for joint, opt in (("evrr", detail.vrr), ("frr", detail.frr)):
                path = out_dir / f"trajectory_{joint}_{tag}.csv"
                write_trajectory_csv(opt.best_run.trajectory, path)
                manifest.append(path)

            path = out_dir / f"ratio_curve_{tag}.csv"
            write_ratio_curve_csv(detail.curve, path)
            manifest.append(path)

            path = out_dir / f"fig7_{tag}.csv"
            rows = list(fig7_rows("EVRR", detail.vrr.best_run.trajectory))
            rows += list(fig7_rows("FRR", detail.frr.best_run.trajectory))
            _write_csv(path, FIG7_COLUMNS, rows)
            manifest.append(path)

            if dump_grid:
                for joint, opt in (("evrr", detail.vrr), ("frr", detail.frr)):
                    path = out_dir / f"grid_{joint}_{tag}.csv"
                    write_grid_csv(opt.evaluations, path)
                    manifest.append(path)

    meta = run_metadata(run, report.metadata.get("wall_time_s"))
    meta.update({k: v for k, v in report.metadata.items() if k != "wall_time_s"})
    meta["failures"] = {str(a): m for a, m in report.failures.items()}
    path = out_dir / "metadata.json"
    write_json(path, meta)
    manifest.append(path)

    if run is not None:
        manifest.append(dump_config(run, out_dir / CONFIG_FILE))

    logger.info("[Storage] Wrote %d files to %s", len(manifest), out_dir)
    return manifest


def dump_config(run: RunConfig, path: str | Path) -> Path:
    """Write the resolved document; ``load_config`` on it gives back an equal RunConfig."""
    path = Path(path)
    write_json(path, run.source)
    return path
