"""Module chung chứa logic chạy các lệnh, dùng cho cả CLI và test."""
from __future__ import annotations

import logging
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from .. import config
from ..errors import ConfigError
from .models.mechanism import FrrParams, ratio_argmax_closed_form, ratio_curve
from .models.motor import envelope_table
from .optimizer import compare_designs, optimize_frr, optimize_vrr
from .sim import simulate_jump
from .workbook import read_summary_workbook
from .storage import (
    CONFIG_FILE,
    RunConfig,
    dump_config,
    write_json,
    emit_report,
    run_metadata,
    write_envelope_csv,
    write_grid_csv,
    write_ratio_curve_csv,
    write_trajectory_csv,
)

logger = logging.getLogger(__name__)


def _out_dir(run: RunConfig) -> Path:
    _, out_dir = config.prepare_output_paths(run.output_dir, datetime.now())
    return out_dir


def run_simulate(run: RunConfig, status_callback: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Một lần nhảy với cơ cấu trong config; ghi trajectory.csv."""
    out_dir = _out_dir(run)
    if status_callback is not None:
        status_callback["progress"] = f"Simulating {run.mechanism.describe()} from q2={run.sim.q2_init:.4f}"

    started = time.perf_counter()
    res = simulate_jump(run.leg, run.motor, run.mechanism, run.sim, record_trajectory=True)

    traj_file = out_dir / "trajectory.csv"
    write_trajectory_csv(res.trajectory, traj_file)
    write_json(out_dir / "metadata.json", run_metadata(run, time.perf_counter() - started))
    dump_config(run, out_dir / CONFIG_FILE)

    logger.info("[Runner] simulate -> %s, H=%.4f m", res.terminated_by.value, res.h_jump)
    return {
        "w_takeoff": res.w_takeoff,
        "h_jump": res.h_jump,
        "t_takeoff": res.t_takeoff,
        "terminated_by": res.terminated_by.value,
        "trajectory_file": str(traj_file),
    }


def run_optimize(
    run: RunConfig,
    joint: str = "vrr",
    workers: int = config.WORKERS,
    dump_grid: bool = False,
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
) -> Dict[str, Any]:
    """Grid search một loại khớp tại góc q2_init của config."""
    joint = joint.lower()
    if joint not in ("vrr", "frr"):
        raise ConfigError(f"expected 'vrr' or 'frr', got {joint!r}", key="joint")

    out_dir = _out_dir(run)
    started = time.perf_counter()
    optimize = optimize_vrr if joint == "vrr" else optimize_frr
    opt = optimize(
        run.leg, run.motor, run.sim, run.search,
        workers=workers, status_callback=status_callback, show_progress=show_progress,
    )

    files = []
    path = out_dir / f"trajectory_{joint}.csv"
    write_trajectory_csv(opt.best_run.trajectory, path)
    files.append(path)
    if dump_grid:
        path = out_dir / f"grid_{joint}.csv"
        write_grid_csv(opt.evaluations, path)
        files.append(path)
    path = out_dir / "metadata.json"
    write_json(path, run_metadata(run, time.perf_counter() - started, {"joint": joint, "workers": workers}))
    files.append(path)
    files.append(dump_config(run, out_dir / CONFIG_FILE))

    return {
        "joint": joint,
        "best_params": opt.best_params.describe(),
        "w_takeoff": opt.w_takeoff,
        "h_jump": opt.h_jump,
        "evaluated": len(opt.evaluations),
        "infeasible": opt.n_infeasible,
        "files": [str(p) for p in files],
    }


def run_compare(
    run: RunConfig,
    workers: int = config.WORKERS,
    dump_grid: bool = False,
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
) -> Dict[str, Any]:
    """EVRR vs FRR tại mọi góc ban đầu, rồi ghi report."""
    out_dir = _out_dir(run)
    report = compare_designs(
        run.leg, run.motor, run.sim, run.search, run.angles,
        workers=workers, status_callback=status_callback, show_progress=show_progress,
    )
    report.metadata["workers"] = workers
    manifest = emit_report(report, out_dir, run, dump_grid=dump_grid)

    # Đọc lại workbook để chắc file mở được
    book = out_dir / "summary.xlsx"
    if book in manifest:
        n_rows = len(read_summary_workbook(book))
        if n_rows != 2 * len(report.rows):
            logger.warning("[Runner] %s has %d rows, expected %d", book, n_rows, 2 * len(report.rows))

    rows = [
        {
            "angle_rad": row.angle,
            "evrr": row.vrr_params.describe(),
            "h_evrr": row.h_vrr,
            "frr_k": row.frr_k,
            "h_frr": row.h_frr,
            "improvement_pct": row.improvement_pct,
        }
        for row in report.rows
    ]
    return {
        "rows": rows,
        "failures": {str(a): m for a, m in report.failures.items()},
        "files": [str(p) for p in manifest],
    }


def run_sweep_ratio(
    run: RunConfig,
    q2_lo: Optional[float] = None,
    q2_hi: Optional[float] = None,
    n: int = 200,
) -> Dict[str, Any]:
    """Đường cong k(q2) của cơ cấu VRR trong config."""
    mech = run.mechanism
    if isinstance(mech, FrrParams):
        raise ConfigError("sweep-ratio needs a vrr mechanism", key="mechanism.type")
    lo = run.sim.q2_init if q2_lo is None else q2_lo
    hi = run.sim.q2_takeoff_cap if q2_hi is None else q2_hi

    out_dir = _out_dir(run)
    curve = ratio_curve(mech, lo, hi, n)
    path = out_dir / "ratio_curve.csv"
    write_ratio_curve_csv(curve, path)
    return {
        "params": mech.describe(),
        "argmax_q2": curve.argmax_q2,
        "k_max": curve.k_max,
        "argmax_q2_closed_form": ratio_argmax_closed_form(mech),
        "file": str(path),
    }


def run_envelope(run: RunConfig, n: int = 101) -> Dict[str, Any]:
    out_dir = _out_dir(run)
    points = envelope_table(run.motor, n)
    path = out_dir / "envelope.csv"
    write_envelope_csv(points, path)
    peak = max(points, key=lambda p: p.p_out)
    return {"n": n, "peak_p_out_w": peak.p_out, "peak_omega": peak.omega, "file": str(path)}
