import itertools
import math
from dataclasses import replace

import pytest

from vrrjump.errors import InfeasibleSearchError, SimulationError
from vrrjump.engine.models.mechanism import FrrParams, VrrParams, meets_build_rules
from vrrjump.engine.models.motor import MotorParams
from vrrjump.engine.optimizer import (
    Evaluation,
    SearchBox,
    compare_designs,
    improvement_pct,
    optimize_frr,
    optimize_vrr,
    select_best,
)
from vrrjump.engine.sim import SimConfig, simulate_jump


def _brute_force(leg, motor, cfg, box):
    best, best_key = None, None
    for r, s0, dth in itertools.product(box.r_values(), box.s0_values(), box.dtheta_values()):
        p = VrrParams(r=r, S0=s0, delta_theta=dth)
        try:
            w = simulate_jump(leg, motor, p, cfg, record_trajectory=False).w_takeoff
        except (SimulationError, ValueError):
            continue
        key = (-w, r, s0, abs(dth), dth)
        if best_key is None or key < best_key:
            best, best_key = p, key
    return best


def test_vrr_matches_brute_force(leg, motor, fast_cfg, small_box):
    result = optimize_vrr(leg, motor, fast_cfg, small_box)
    assert result.best_params == _brute_force(leg, motor, fast_cfg, small_box)
    assert result.n_infeasible == 0
    assert result.best_run is not None and result.best_run.trajectory
    assert result.w_takeoff == max(ev.w_takeoff for ev in result.evaluations)


def test_grid_is_complete_and_ordered(leg, motor, fast_cfg, small_box):
    result = optimize_vrr(leg, motor, fast_cfg, small_box)
    assert len(result.evaluations) == small_box.vrr_size() == 27
    expected = list(itertools.product(small_box.r_values(), small_box.s0_values(), small_box.dtheta_values()))
    assert [ev.point for ev in result.evaluations] == expected


def test_thread_pool_matches_sequential(leg, motor, fast_cfg, small_box):
    seq = optimize_vrr(leg, motor, fast_cfg, small_box)
    par = optimize_vrr(leg, motor, fast_cfg, small_box, workers=2, backend="thread")
    assert par.best_params == seq.best_params
    assert [(e.point, e.w_takeoff) for e in par.evaluations] == [(e.point, e.w_takeoff) for e in seq.evaluations]


def test_process_pool_matches_sequential(leg, motor, fast_cfg, small_box):
    seq = optimize_frr(leg, motor, fast_cfg, small_box)
    par = optimize_frr(leg, motor, fast_cfg, small_box, workers=2, backend="process")
    assert par.best_params == seq.best_params
    assert [(e.point, e.w_takeoff) for e in par.evaluations] == [(e.point, e.w_takeoff) for e in seq.evaluations]


def test_status_callback(leg, motor, fast_cfg, small_box):
    status = {}
    optimize_frr(leg, motor, fast_cfg, small_box, status_callback=status)
    assert status["total"] == 3
    assert status["evaluated"] == 3
    assert "3/3" in status["progress"]


def test_all_infeasible(leg, motor, fast_cfg):
    box = SearchBox(
        r_range=(0.047, 0.047, 0.001),
        s0_range=(0.150, 0.150, 0.005),
        dtheta_range=(math.radians(-3), math.radians(-3), math.radians(1)),
        frr_range=(22.0, 22.0, 1.0),
    )
    with pytest.raises(InfeasibleSearchError):
        optimize_vrr(leg, motor, fast_cfg, box)


def test_zero_torque_ties_go_to_smallest_parameters(leg, small_box):
    motor = MotorParams.from_peaks(tau_peak=0.0)
    cfg = SimConfig(q2_init=-2.618, dt=1e-3, t_max=0.02)
    vrr = optimize_vrr(leg, motor, cfg, small_box)
    assert vrr.best_params == VrrParams(r=0.045, S0=0.140, delta_theta=0.0)
    frr = optimize_frr(leg, motor, cfg, small_box)
    assert frr.best_params == FrrParams(20.0)


def _ev(point, w, feasible=True):
    return Evaluation("vrr", point, None, w, math.nan, feasible)


def test_select_best_tie_break():
    evs = [
        _ev((0.05, 0.15, 0.0), 100.0),
        _ev((0.04, 0.16, 0.01), 100.0),
        _ev((0.04, 0.16, -0.01), 100.0),
        _ev((0.03, 0.10, 0.0), 120.0, feasible=False),
    ]
    assert select_best(evs) == 2


def test_select_best_scale_invariant():
    evs = [_ev((0.03 + 0.001 * i, 0.15, 0.0), w) for i, w in enumerate([10.0, 30.0, 20.0, 30.0])]
    assert select_best(evs) == select_best([ev.scaled(2.5) for ev in evs]) == 1


def test_select_best_needs_a_feasible_candidate():
    with pytest.raises(InfeasibleSearchError):
        select_best([_ev((0.03, 0.15, 0.0), 10.0, feasible=False)])


def test_improvement_pct():
    assert improvement_pct(0.62, 0.47) == pytest.approx(31.914893617, rel=1e-9)
    assert improvement_pct(0.5, 0.5) == 0.0
    assert math.isnan(improvement_pct(0.5, 0.0))


def test_compare_orders_rows_and_keeps_going(leg, motor, fast_cfg):
    box = SearchBox(
        r_range=(0.047, 0.047, 0.001),
        s0_range=(0.150, 0.150, 0.005),
        dtheta_range=(math.radians(1), math.radians(1), math.radians(1)),
        frr_range=(22.0, 22.0, 1.0),
    )
    report = compare_designs(leg, motor, fast_cfg, box, [-2.2689, -3.14, -2.618], curve_samples=50)

    assert [row.angle for row in report.rows] == [-2.618, -2.2689]
    assert list(report.failures) == [-3.14]
    for row in report.rows:
        assert row.h_vrr > 0 and row.h_frr > 0
        assert row.improvement_pct == pytest.approx(improvement_pct(row.h_vrr, row.h_frr))
        assert len(report.details[row.angle].curve.samples) == 50
    assert report.metadata["wall_time_s"] >= 0


def test_build_rules_prune_candidates(leg, motor, fast_cfg, small_box):
    box = replace(small_box, dead_length=0.072, q2_flex=-2.618, standing_reach=True)
    result = optimize_vrr(leg, motor, fast_cfg, box)
    expected = [meets_build_rules(ev.params, -2.618, 0.072) for ev in result.evaluations]
    assert [ev.feasible for ev in result.evaluations] == expected
    assert result.n_infeasible == expected.count(False) > 0
    assert meets_build_rules(result.best_params, -2.618, 0.072)
    assert result.best_params.delta_theta >= 0


def test_flex_angle_follows_the_start(small_box):
    assert small_box.flex_angle(-2.0) == -2.0
    box = replace(small_box, q2_flex=-2.618)
    assert box.flex_angle(-2.0) == -2.618
    assert box.flex_angle(-3.0) == -3.0
