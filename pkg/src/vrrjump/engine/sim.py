"""Explosive takeoff simulation of the simplified leg.

The body is a point mass m_tot at the CoM pushed by F = tau_J * lambda(q2)
against gravity. The knee command is always the envelope maximum (maximum
effort from t = 0). State integrated with fixed-step RK4 is
(q2, dq2, w_motor), joint acceleration recovered from the CoM acceleration::

    y_dd  = F / m_tot - g
    q2_dd = (y_dd - J'(q2) * dq2^2) / J(q2)

Steps are shortened only on the final approach to the takeoff cap, where
dq2 grows like 1/J: there each step covers at most half of the remaining gap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

from ..config import DT_S, Q2_TAKEOFF_CAP_RAD, T_MAX_S
from ..errors import DomainError, SimulationError
from .models.kinematics import (
    LegModel,
    _height,
    _jacobian,
    _jacobian_rate,
    com_force,
    com_height,
    height_amplitude,
    standing_height,
)
from .models.mechanism import FrrParams, Mechanism, _ratio_at_theta, check_working_range, mechanism_ratio
from .models.motor import MotorParams, joint_power, joint_torque, max_torque
from .utils import normalize_text

logger = logging.getLogger(__name__)

# gap below which the knee counts as sitting on the takeoff cap
CAP_SNAP_RAD = 1e-9
# one step may cover at most this share of the remaining gap to the cap
CAP_APPROACH_FRACTION = 0.5


class TakeoffRule(str, Enum):
    CONTACT_FORCE_ZERO = "contact_force_zero"
    ANGLE_CAP = "angle_cap"
    EITHER = "either"

    @classmethod
    def _missing_(cls, value):
        key = normalize_text(value).replace("_", "")
        for member in cls:
            if member.value.replace("_", "") == key:
                return member
        return None


class Termination(str, Enum):
    CONTACT_FORCE_ZERO = "ContactForceZero"
    ANGLE_CAP = "AngleCap"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class SimConfig:
    q2_init: float
    dt: float = DT_S
    t_max: float = T_MAX_S
    q2_takeoff_cap: float = Q2_TAKEOFF_CAP_RAD
    takeoff_rule: TakeoffRule = TakeoffRule.EITHER

    def __post_init__(self):
        object.__setattr__(self, "takeoff_rule", TakeoffRule(self.takeoff_rule))
        if self.dt <= 0:
            raise DomainError(f"SimConfig: dt must be > 0 (dt={self.dt})")
        if self.t_max < 10 * self.dt:
            raise DomainError(f"SimConfig: t_max must be >= 10*dt (t_max={self.t_max}, dt={self.dt})")
        if not (-math.pi <= self.q2_init < self.q2_takeoff_cap <= -0.01):
            raise DomainError(
                f"SimConfig: need -pi <= q2_init < q2_takeoff_cap <= -0.01 "
                f"(q2_init={self.q2_init}, q2_takeoff_cap={self.q2_takeoff_cap})"
            )


@dataclass(slots=True)
class SimState:
    t: float
    q2: float
    dq2: float
    theta: float
    k: float
    lam: float
    y_com: float
    dy_com: float
    tau_m: float
    tau_j: float
    omega_m: float
    p_m: float
    p_j: float
    f_contact: float
    w_motor: float


@dataclass
class TakeoffResult:
    w_takeoff: float
    h_jump: float
    t_takeoff: float
    q2_at_takeoff: float
    terminated_by: Termination
    trajectory: List[SimState] = field(default_factory=list, repr=False)
    final_state: Optional[SimState] = None
    max_omega_m: float = 0.0
    w_motor: float = 0.0


def rk4_step(f: Callable[[Tuple[float, ...]], Tuple[float, ...]], x: Tuple[float, ...], dt: float) -> Tuple[float, ...]:
    """Classic 4th-order Runge-Kutta step for an autonomous system."""
    k1 = f(x)
    k2 = f(tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k1)))
    k3 = f(tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k2)))
    k4 = f(tuple(xi + dt * ki for xi, ki in zip(x, k3)))
    return tuple(
        xi + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
    )


class _LegDrive:
    """Precomputed constants and right-hand side for one (leg, motor, mechanism)."""

    def __init__(self, leg: LegModel, motor: MotorParams, mech: Mechanism, q2_stop: float):
        self.leg = leg
        self.motor = motor
        self.mech = mech
        self.amp = height_amplitude(leg)
        self.m = leg.total_mass()
        self.g = leg.g
        self.eta = motor.eta_j
        self.q2_stop = q2_stop
        self.fixed = isinstance(mech, FrrParams)

    def ratio(self, q2: float) -> Tuple[float, float]:
        if self.fixed:
            return math.nan, self.mech.k_fixed
        theta = q2 + math.pi - self.mech.delta_theta
        return theta, _ratio_at_theta(self.mech.r, self.mech.S0, self.mech.Q, theta)

    def drive(self, q2: float, dq2: float):
        J = _jacobian(self.amp, q2)
        if J <= 0.0:
            raise SimulationError(f"knee reached full extension (q2={q2:.6g}) inside a step")
        theta, k = self.ratio(q2)
        omega_m = k * dq2
        tau_m = max_torque(self.motor, abs(omega_m))
        tau_j = tau_m * k * self.eta
        return theta, k, J, omega_m, tau_m, tau_j, tau_j / J

    def held(self, x: Sequence[float]) -> bool:
        # resting on the crouch stop and unable to lift
        q2, dq2 = x[0], x[1]
        if q2 > self.q2_stop or dq2 > 0.0:
            return False
        return self.drive(q2, 0.0)[-1] <= self.m * self.g

    def rhs(self, x: Tuple[float, ...]) -> Tuple[float, float, float]:
        q2, dq2 = x[0], x[1]
        _, _, J, omega_m, tau_m, _, force = self.drive(q2, dq2)
        ydd = force / self.m - self.g
        qdd = (ydd - _jacobian_rate(self.amp, q2) * dq2 * dq2) / J
        return dq2, qdd, tau_m * omega_m

    def sample(self, t: float, x: Sequence[float], held: bool = False) -> SimState:
        # recorded channels go through the checked public helpers; rhs stays inline
        q2, dq2, w = x
        theta = self.ratio(q2)[0]
        k = mechanism_ratio(self.mech, q2)
        J = _jacobian(self.amp, q2)
        omega_m = k * dq2
        tau_m = max_torque(self.motor, abs(omega_m))
        tau_j = joint_torque(self.motor, tau_m, k)
        p_m = tau_m * omega_m
        return SimState(
            t=t,
            q2=q2,
            dq2=dq2,
            theta=theta,
            k=k,
            lam=1.0 / J,
            y_com=_height(self.amp, q2),
            dy_com=J * dq2,
            tau_m=tau_m,
            tau_j=tau_j,
            omega_m=omega_m,
            p_m=p_m,
            p_j=joint_power(self.motor, p_m),
            f_contact=self.m * self.g if held else com_force(self.leg, q2, tau_j),
            w_motor=w,
        )


def _cap_crossing(amp: float, cap: float, t: float, h: float, x, x_new):
    """Takeoff sample inside a step that crossed the cap.

    Interpolates on CoM height and velocity, which stay smooth in time while
    dq2 grows like 1/J near extension.
    """
    y0, y1 = _height(amp, x[0]), _height(amp, x_new[0])
    frac = (_height(amp, cap) - y0) / (y1 - y0) if y1 != y0 else 1.0
    frac = min(max(frac, 0.0), 1.0)
    v0 = _jacobian(amp, x[0]) * x[1]
    v1 = _jacobian(amp, x_new[0]) * x_new[1]
    v_cap = v0 + frac * (v1 - v0)
    w_cap = x[2] + frac * (x_new[2] - x[2])
    return t + frac * h, (cap, v_cap / _jacobian(amp, cap), w_cap)


def contact_force(leg: LegModel, q2: float, dq2: float, ddy_com: float) -> float:
    """Ground reaction m_tot * (y_dd + g); takeoff when it reaches zero."""
    return leg.total_mass() * (ddy_com + leg.g)


def takeoff_energy(leg: LegModel, q2: float, dy_com: float) -> float:
    m = leg.total_mass()
    return 0.5 * m * dy_com * dy_com + m * leg.g * com_height(leg, q2)


def jump_height(leg: LegModel, w_takeoff: float) -> float:
    """Rise of the CoM above the standing height; negative means no liftoff."""
    if w_takeoff < 0:
        raise DomainError(f"jump_height: w_takeoff must be >= 0 (got {w_takeoff})")
    return w_takeoff / (leg.total_mass() * leg.g) - standing_height(leg)


def simulate_jump(
    leg: LegModel,
    motor: MotorParams,
    mech: Mechanism,
    cfg: SimConfig,
    record_trajectory: bool = True,
) -> TakeoffResult:
    """Maximum-effort takeoff from rest at ``cfg.q2_init``."""
    if cfg.q2_takeoff_cap > leg.q2_cap:
        raise DomainError(
            f"takeoff cap {cfg.q2_takeoff_cap} lies beyond the knee-to-CoM guard {leg.q2_cap}"
        )
    check_working_range(mech, cfg.q2_init, cfg.q2_takeoff_cap)

    model = _LegDrive(leg, motor, mech, cfg.q2_init)
    rule = cfg.takeoff_rule
    use_cap = rule in (TakeoffRule.ANGLE_CAP, TakeoffRule.EITHER)
    use_contact = rule in (TakeoffRule.CONTACT_FORCE_ZERO, TakeoffRule.EITHER)
    cap = cfg.q2_takeoff_cap
    dt = cfg.dt
    t_end = cfg.t_max - 0.5 * dt

    x = (cfg.q2_init, 0.0, 0.0)
    t = 0.0
    held = model.held(x)
    state = model.sample(0.0, x, held)
    trajectory = [state] if record_trajectory else []
    max_omega = abs(state.omega_m)
    terminated = Termination.TIMEOUT

    while t < t_end:
        h = dt
        gap = cap - x[0]
        if use_cap and not held and x[1] > 0.0 and dt * x[1] > CAP_APPROACH_FRACTION * gap:
            # dq2 grows like 1/J near extension: close the gap geometrically
            if gap <= CAP_SNAP_RAD:
                state = model.sample(t, (cap, x[1], x[2]))
                max_omega = max(max_omega, abs(state.omega_m))
                terminated = Termination.ANGLE_CAP
                if record_trajectory:
                    trajectory[-1] = state
                break
            h = CAP_APPROACH_FRACTION * gap / x[1]
        t_new = t + h
        try:
            if held:
                x_new = (x[0], 0.0, x[2])
            else:
                x_new = rk4_step(model.rhs, x, h)
        except (SimulationError, DomainError, ZeroDivisionError, ValueError, OverflowError) as e:
            raise SimulationError(f"integration failed at t={t_new:.6g}: {e}", last_state=state) from e

        if use_cap and x_new[0] >= cap:
            state = model.sample(*_cap_crossing(model.amp, cap, t, h, x, x_new))
            if record_trajectory:
                trajectory.append(state)
            max_omega = max(max_omega, abs(state.omega_m))
            terminated = Termination.ANGLE_CAP
            break

        if not (-math.pi <= x_new[0] <= leg.q2_cap):
            raise SimulationError(
                f"knee left the working range at t={t_new:.6g} (q2={x_new[0]:.6g})", last_state=state
            )

        x, t = x_new, t_new
        held = model.held(x)
        state = model.sample(t, x, held)
        if record_trajectory:
            trajectory.append(state)
        max_omega = max(max_omega, abs(state.omega_m))

        if use_contact and state.f_contact <= 0.0:
            terminated = Termination.CONTACT_FORCE_ZERO
            break

    w_takeoff = takeoff_energy(leg, state.q2, state.dy_com)
    result = TakeoffResult(
        w_takeoff=w_takeoff,
        h_jump=jump_height(leg, w_takeoff),
        t_takeoff=state.t,
        q2_at_takeoff=state.q2,
        terminated_by=terminated,
        trajectory=trajectory,
        final_state=state,
        max_omega_m=max_omega,
        w_motor=state.w_motor,
    )
    logger.debug(
        "[Sim] %s q2_init=%.4f -> %s at t=%.4f, W=%.2f J, H=%.4f m",
        getattr(mech, "describe", lambda: mech)(),
        cfg.q2_init,
        terminated.value,
        result.t_takeoff,
        result.w_takeoff,
        result.h_jump,
    )
    return result


def ballistic_check(leg: LegModel, state, duration: float, dt: float = DT_S) -> float:
    """Max relative energy drift of the RK4 scheme with zero knee torque.

    The window ends early if the knee would leave [-pi, q2_cap].
    """
    amp = height_amplitude(leg)
    m, g = leg.total_mass(), leg.g

    def rhs(x):
        q2, dq2 = x
        J = _jacobian(amp, q2)
        return dq2, (-g - _jacobian_rate(amp, q2) * dq2 * dq2) / J

    def energy(x):
        q2, dq2 = x
        v = _jacobian(amp, q2) * dq2
        return 0.5 * m * v * v + m * g * _height(amp, q2)

    x = (state.q2, state.dq2)
    e0 = energy(x)
    scale = abs(e0) if e0 != 0.0 else 1.0
    drift = 0.0
    for _ in range(int(round(duration / dt))):
        try:
            x_new = rk4_step(rhs, x, dt)
        except ZeroDivisionError:
            break
        if not (-math.pi <= x_new[0] <= leg.q2_cap):
            break
        x = x_new
        drift = max(drift, abs(energy(x) - e0) / scale)
    return drift
