"""Exhaustive mechanism search maximising takeoff energy.

Every grid point is simulated with the maximum-effort takeoff; candidates that
fail the linkage working-range guard or the search box's build rules are
recorded as infeasible and skipped by the argmax. Ties go to the
lexicographically smallest parameters.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from ..errors import DomainError, InfeasibleSearchError, SimulationError, VrrJumpError
from ..executor import init_executor
from .models.kinematics import LegModel
from .models.mechanism import (
    FrrParams,
    Mechanism,
    RatioCurve,
    VrrParams,
    is_feasible,
    meets_build_rules,
    ratio_curve,
)
from .models.motor import MotorParams
from .sim import SimConfig, TakeoffResult, simulate_jump
from .utils import grid_axis

logger = logging.getLogger(__name__)

Range = Tuple[float, float, float]


@dataclass(frozen=True)
class SearchBox:
    """Inclusive (min, max, step) axes in SI units (m, m, rad, dimensionless).

    The build rules apply to VRR candidates only: ``dead_length`` (m, 0 = off)
    is the actuator body that must fit beside the stroke from ``q2_flex``
    (None = the start angle of each run) to full extension.
    """

    r_range: Range
    s0_range: Range
    dtheta_range: Range
    frr_range: Range
    dead_length: float = 0.0
    q2_flex: Optional[float] = None
    standing_reach: bool = False

    def __post_init__(self):
        for name in ("r_range", "s0_range", "dtheta_range", "frr_range"):
            lo, hi, step = getattr(self, name)
            if not lo <= hi:
                raise DomainError(f"SearchBox.{name}: need min <= max ({lo}, {hi})")
            if not step > 0:
                raise DomainError(f"SearchBox.{name}: step must be > 0 (step={step})")
        if self.dead_length < 0:
            raise DomainError(f"SearchBox.dead_length must be >= 0 (dead_length={self.dead_length})")
        if self.q2_flex is not None and not (-math.pi <= self.q2_flex < 0):
            raise DomainError(f"SearchBox.q2_flex must lie in [-pi, 0) (q2_flex={self.q2_flex})")

    def r_values(self) -> List[float]:
        return grid_axis(*self.r_range)

    def s0_values(self) -> List[float]:
        return grid_axis(*self.s0_range)

    def dtheta_values(self) -> List[float]:
        return grid_axis(*self.dtheta_range)

    def k_values(self) -> List[float]:
        return grid_axis(*self.frr_range)

    def vrr_size(self) -> int:
        return len(self.r_values()) * len(self.s0_values()) * len(self.dtheta_values())

    def flex_angle(self, q2_init: float) -> float:
        # deepest crouch the actuator stroke must cover
        return q2_init if self.q2_flex is None else min(self.q2_flex, q2_init)


@dataclass(frozen=True)
class Evaluation:
    kind: str  # "vrr" | "frr"
    point: Tuple[float, ...]  # (r, S0, dtheta) or (k_fixed,)
    params: Optional[Mechanism]
    w_takeoff: float
    h_jump: float
    feasible: bool
    terminated_by: Optional[str] = None
    max_omega_m: float = math.nan

    def scaled(self, factor: float) -> "Evaluation":
        return replace(self, w_takeoff=self.w_takeoff * factor)


@dataclass
class OptResult:
    best_params: Mechanism
    w_takeoff: float
    h_jump: float
    evaluations: List[Evaluation]
    n_infeasible: int
    best_run: Optional[TakeoffResult] = field(default=None, repr=False)


@dataclass
class ComparisonRow:
    angle: float
    vrr_params: VrrParams
    h_vrr: float
    w_vrr: float
    frr_k: float
    h_frr: float
    w_frr: float
    improvement_pct: float


@dataclass
class AngleDetail:
    angle: float
    vrr: OptResult
    frr: OptResult
    curve: RatioCurve


@dataclass
class ComparisonReport:
    rows: List[ComparisonRow] = field(default_factory=list)
    details: Dict[float, AngleDetail] = field(default_factory=dict)
    failures: Dict[float, str] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)


def _evaluate(task) -> Evaluation:
    """Simulate one candidate; top-level so process pools can pickle it."""
    kind, point, leg, motor, cfg, box = task
    try:
        params = VrrParams(r=point[0], S0=point[1], delta_theta=point[2]) if kind == "vrr" else FrrParams(point[0])
    except DomainError:
        return Evaluation(kind, point, None, math.nan, math.nan, False)

    if not is_feasible(params, cfg.q2_init, cfg.q2_takeoff_cap):
        return Evaluation(kind, point, params, math.nan, math.nan, False)
    if not meets_build_rules(params, box.flex_angle(cfg.q2_init), box.dead_length, box.standing_reach):
        return Evaluation(kind, point, params, math.nan, math.nan, False)
    try:
        res = simulate_jump(leg, motor, params, cfg, record_trajectory=False)
    except SimulationError as e:
        logger.warning("[Optimizer] %s infeasible: %s", params.describe(), e)
        return Evaluation(kind, point, params, math.nan, math.nan, False)
    return Evaluation(
        kind, point, params, res.w_takeoff, res.h_jump, True, res.terminated_by.value, res.max_omega_m
    )


def _tie_key(ev: Evaluation) -> Tuple[float, ...]:
    if ev.kind == "vrr":
        r, s0, dth = ev.point
        return (r, s0, abs(dth), dth)
    return ev.point


def select_best(evaluations: Sequence[Evaluation]) -> int:
    """Index of the max-energy feasible evaluation, smallest parameters on ties."""
    feasible = [i for i, ev in enumerate(evaluations) if ev.feasible]
    if not feasible:
        raise InfeasibleSearchError(
            f"no feasible design among {len(evaluations)} candidates (all failed the working-range guard or build rules)"
        )
    return min(feasible, key=lambda i: (-evaluations[i].w_takeoff, _tie_key(evaluations[i])))


def evaluate_candidates(
    tasks: List[tuple],
    workers: int = 1,
    backend: str = "process",
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
    label: str = "candidates",
) -> List[Evaluation]:
    """Evaluate tasks in grid order, sequentially or on a worker pool."""
    total = len(tasks)
    if status_callback is not None:
        status_callback["total"] = total
        status_callback["evaluated"] = 0

    executor = init_executor(workers, backend)
    try:
        if executor is None:
            it = map(_evaluate, tasks)
        else:
            chunk = max(1, total // (workers * 16))
            it = executor.map(_evaluate, tasks, chunksize=chunk)

        out: List[Evaluation] = []
        for ev in tqdm(it, total=total, desc=label, disable=not show_progress, leave=False):
            out.append(ev)
            if status_callback is not None:
                status_callback["evaluated"] = len(out)
                status_callback["progress"] = f"{label}: {len(out)}/{total}"
        return out
    finally:
        if executor is not None:
            executor.shutdown()


def _finish(leg, motor, cfg, evaluations: List[Evaluation], label: str) -> OptResult:
    best_i = select_best(evaluations)
    best = evaluations[best_i]
    n_infeasible = sum(1 for ev in evaluations if not ev.feasible)
    # re-run the winner with its trajectory for reports
    best_run = simulate_jump(leg, motor, best.params, cfg, record_trajectory=True)
    logger.info(
        "[Optimizer] %s q2_init=%.4f: best %s, W=%.2f J, H=%.4f m (%d evaluated, %d infeasible)",
        label,
        cfg.q2_init,
        best.params.describe(),
        best.w_takeoff,
        best.h_jump,
        len(evaluations),
        n_infeasible,
    )
    return OptResult(
        best_params=best.params,
        w_takeoff=best.w_takeoff,
        h_jump=best.h_jump,
        evaluations=evaluations,
        n_infeasible=n_infeasible,
        best_run=best_run,
    )


def vrr_tasks(leg: LegModel, motor: MotorParams, cfg: SimConfig, box: SearchBox) -> List[tuple]:
    grid = itertools.product(box.r_values(), box.s0_values(), box.dtheta_values())
    return [("vrr", point, leg, motor, cfg, box) for point in grid]


def frr_tasks(leg: LegModel, motor: MotorParams, cfg: SimConfig, box: SearchBox) -> List[tuple]:
    return [("frr", (k,), leg, motor, cfg, box) for k in box.k_values()]


def optimize_vrr(
    leg: LegModel,
    motor: MotorParams,
    cfg: SimConfig,
    box: SearchBox,
    workers: int = 1,
    backend: str = "process",
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
) -> OptResult:
    """Grid search over (r, S0, delta_theta)."""
    tasks = vrr_tasks(leg, motor, cfg, box)
    evaluations = evaluate_candidates(tasks, workers, backend, status_callback, show_progress, "EVRR grid")
    return _finish(leg, motor, cfg, evaluations, "EVRR")


def optimize_frr(
    leg: LegModel,
    motor: MotorParams,
    cfg: SimConfig,
    box: SearchBox,
    workers: int = 1,
    backend: str = "process",
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
) -> OptResult:
    """Scan over the fixed ratio k."""
    tasks = frr_tasks(leg, motor, cfg, box)
    evaluations = evaluate_candidates(tasks, workers, backend, status_callback, show_progress, "FRR scan")
    return _finish(leg, motor, cfg, evaluations, "FRR")


def improvement_pct(h_vrr: float, h_frr: float) -> float:
    if h_vrr == h_frr:
        return 0.0
    if h_frr == 0:
        return math.nan
    return (h_vrr - h_frr) / abs(h_frr) * 100.0


def compare_designs(
    leg: LegModel,
    motor: MotorParams,
    cfg: SimConfig,
    box: SearchBox,
    angles: Sequence[float],
    workers: int = 1,
    backend: str = "process",
    status_callback: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
    curve_samples: int = 200,
) -> ComparisonReport:
    """Optimise both joints at every initial angle and tabulate the heights."""
    started = time.perf_counter()
    report = ComparisonReport()

    for idx, angle in enumerate(angles, start=1):
        if status_callback is not None:
            status_callback["current_angle"] = angle
            status_callback["progress"] = f"Angle {idx}/{len(angles)}: {angle:.4f} rad"
        logger.info("[Compare] Angle %d/%d: q2_init=%.4f rad", idx, len(angles), angle)

        try:
            cfg_a = replace(cfg, q2_init=angle)
            vrr = optimize_vrr(leg, motor, cfg_a, box, workers, backend, status_callback, show_progress)
            frr = optimize_frr(leg, motor, cfg_a, box, workers, backend, status_callback, show_progress)
            curve = ratio_curve(vrr.best_params, angle, cfg_a.q2_takeoff_cap, curve_samples)
        except VrrJumpError as e:
            logger.error("[Compare] Angle %.4f failed: %s", angle, e)
            report.failures[angle] = str(e)
            if status_callback is not None:
                status_callback["error"] = str(e)
            continue

        report.details[angle] = AngleDetail(angle=angle, vrr=vrr, frr=frr, curve=curve)
        report.rows.append(
            ComparisonRow(
                angle=angle,
                vrr_params=vrr.best_params,
                h_vrr=vrr.h_jump,
                w_vrr=vrr.w_takeoff,
                frr_k=frr.best_params.k_fixed,
                h_frr=frr.h_jump,
                w_frr=frr.w_takeoff,
                improvement_pct=improvement_pct(vrr.h_jump, frr.h_jump),
            )
        )

    # deepest crouch first
    report.rows.sort(key=lambda row: -abs(row.angle))
    report.metadata["wall_time_s"] = time.perf_counter() - started
    return report
