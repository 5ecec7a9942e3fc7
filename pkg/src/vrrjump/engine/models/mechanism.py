"""Guide-rod knee linkage driven by a ball-screw linear actuator.

Reduction ratio (screw radians per joint radian) at crank angle theta::

    k = 2*pi*r*(S0 + r)*sin(theta) / (Q * sqrt(2*S0*r - 2*r^2*cos(theta)
                                             + S0^2 + 2*r^2 - 2*S0*r*cos(theta)))

with the joint angle q2 = theta - pi + delta_theta.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from ...config import LEAD_MM, THETA_GUARD_HI, THETA_GUARD_LO
from ...errors import DegenerateGeometryError, DomainError, RangeError
from .kinematics import LegModel, knee_to_com_ratio

logger = logging.getLogger(__name__)

ARGMAX_TOL_RAD = 1e-6


@dataclass(frozen=True)
class VrrParams:
    r: float
    S0: float
    delta_theta: float = 0.0
    Q: float = LEAD_MM / 1000.0

    def __post_init__(self):
        if self.r <= 0:
            raise DomainError(f"VrrParams: crank length r must be > 0 (r={self.r})")
        if self.S0 <= self.r:
            raise DomainError(f"VrrParams: frame length S0 must exceed r (S0={self.S0}, r={self.r})")
        if self.Q <= 0:
            raise DomainError(f"VrrParams: screw lead Q must be > 0 (Q={self.Q})")
        if abs(self.delta_theta) > math.pi / 6:
            raise DomainError(f"VrrParams: |delta_theta| must be <= pi/6 (delta_theta={self.delta_theta})")

    def describe(self) -> str:
        return f"VRR(r={self.r * 1000:g} mm, S0={self.S0 * 1000:g} mm, dtheta={math.degrees(self.delta_theta):g} deg)"


@dataclass(frozen=True)
class FrrParams:
    k_fixed: float

    def __post_init__(self):
        # k_fixed = 0 is kept constructible for degenerate checks; config requires > 0
        if self.k_fixed < 0:
            raise DomainError(f"FrrParams: k_fixed must be >= 0 (k_fixed={self.k_fixed})")

    def describe(self) -> str:
        return f"FRR(k={self.k_fixed:g})"


Mechanism = Union[VrrParams, FrrParams]


@dataclass(frozen=True)
class RatioCurve:
    params: VrrParams
    samples: Tuple[Tuple[float, float], ...]
    argmax_q2: float
    k_max: float
    q2: np.ndarray = field(repr=False, compare=False, default=None)
    k: np.ndarray = field(repr=False, compare=False, default=None)


def crank_angle(params: VrrParams, q2: float) -> float:
    return q2 + math.pi - params.delta_theta


def joint_angle(params: VrrParams, theta: float) -> float:
    return theta - math.pi + params.delta_theta


def _radicand(r: float, s0: float, theta: float) -> float:
    c = math.cos(theta)
    return 2 * s0 * r - 2 * r * r * c + s0 * s0 + 2 * r * r - 2 * s0 * r * c


def _ratio_at_theta(r: float, s0: float, lead: float, theta: float) -> float:
    # no range checks: hot path of the integrator
    return 2 * math.pi * r * (s0 + r) * math.sin(theta) / (lead * math.sqrt(_radicand(r, s0, theta)))


def reduction_ratio(params: VrrParams, q2: float) -> float:
    """Motor (screw) radians per joint radian at knee angle ``q2``."""
    theta = crank_angle(params, q2)
    if not (0.0 <= theta <= math.pi):
        raise RangeError(
            f"crank angle theta={theta:.6g} rad (q2={q2:.6g}) outside [0, pi] for {params.describe()}"
        )
    rad = _radicand(params.r, params.S0, theta)
    if rad <= 0:
        raise DegenerateGeometryError(
            f"non-positive radicand {rad:.3g} at theta={theta:.6g} for r={params.r}, "
            f"S0={params.S0}, delta_theta={params.delta_theta}"
        )
    if theta == 0.0 or theta == math.pi:
        return 0.0
    return max(_ratio_at_theta(params.r, params.S0, params.Q, theta), 0.0)


def ratio_argmax_closed_form(params: VrrParams) -> float:
    """Knee angle of peak ratio; dk/dtheta = 0 gives cos(theta*) = r / (S0 + r)."""
    return joint_angle(params, math.acos(params.r / (params.S0 + params.r)))


def working_range(params: VrrParams) -> Tuple[float, float]:
    """Knee-angle interval inside the crank guard, clipped to q2 <= 0."""
    lo = joint_angle(params, THETA_GUARD_LO)
    hi = min(joint_angle(params, THETA_GUARD_HI), 0.0)
    return lo, hi


def check_working_range(mech: Mechanism, q2_lo: float, q2_hi: float):
    """Raise RangeError if [q2_lo, q2_hi] maps outside the crank guard band."""
    if isinstance(mech, FrrParams):
        return
    th_lo = crank_angle(mech, q2_lo)
    th_hi = crank_angle(mech, q2_hi)
    if th_lo <= THETA_GUARD_LO or th_hi >= THETA_GUARD_HI:
        raise RangeError(
            f"{mech.describe()}: q2 in [{q2_lo:.4f}, {q2_hi:.4f}] maps to theta in "
            f"[{th_lo:.4f}, {th_hi:.4f}], outside ({THETA_GUARD_LO}, {THETA_GUARD_HI:.4f})"
        )


def is_feasible(mech: Mechanism, q2_lo: float, q2_hi: float) -> bool:
    try:
        check_working_range(mech, q2_lo, q2_hi)
    except RangeError:
        return False
    return True


# =============================
# BUILD RULES (actuator packaging)
# =============================
def actuator_length(params: VrrParams, theta: float) -> float:
    """Pivot-to-crank-pin distance, S0 at theta = 0 up to S0 + 2r at theta = pi."""
    return math.sqrt(_radicand(params.r, params.S0, theta))


def reaches_standing(params: VrrParams) -> bool:
    """Full knee extension (q2 = 0) without carrying the crank past dead centre."""
    return crank_angle(params, 0.0) <= math.pi


def actuator_stroke(params: VrrParams, q2_flex: float) -> Tuple[float, float]:
    """(retracted length, stroke) between the deepest crouch and full extension."""
    retracted = actuator_length(params, crank_angle(params, q2_flex))
    extended = actuator_length(params, min(crank_angle(params, 0.0), math.pi))
    return retracted, extended - retracted


def check_build_rules(mech: Mechanism, q2_flex: float, dead_length: float = 0.0, standing_reach: bool = True):
    """Raise RangeError when a VRR design cannot be packaged; FRR always passes."""
    if isinstance(mech, FrrParams):
        return
    if standing_reach and not reaches_standing(mech):
        raise RangeError(f"{mech.describe()}: crank passes dead centre before the knee is straight")
    if dead_length > 0:
        retracted, stroke = actuator_stroke(mech, q2_flex)
        if retracted - stroke < dead_length:
            raise RangeError(
                f"{mech.describe()}: retracted length {retracted * 1000:.1f} mm leaves "
                f"{(retracted - stroke) * 1000:.1f} mm beside a {stroke * 1000:.1f} mm stroke "
                f"(need {dead_length * 1000:g} mm)"
            )


def meets_build_rules(mech: Mechanism, q2_flex: float, dead_length: float = 0.0, standing_reach: bool = True) -> bool:
    try:
        check_build_rules(mech, q2_flex, dead_length, standing_reach)
    except RangeError:
        return False
    return True


def ratio_curve(params: VrrParams, q2_lo: float, q2_hi: float, n: int) -> RatioCurve:
    """Uniformly sampled k(q2) with a golden-section refined peak."""
    if n < 2:
        raise DomainError(f"ratio_curve: need n >= 2 (n={n})")
    if not q2_lo < q2_hi:
        raise DomainError(f"ratio_curve: need q2_lo < q2_hi ({q2_lo}, {q2_hi})")

    q2s = np.linspace(q2_lo, q2_hi, n)
    ks = np.empty(n)
    for i, q in enumerate(q2s):
        try:
            ks[i] = reduction_ratio(params, float(q))
        except DomainError as e:
            raise type(e)(f"sample {i}: {e}") from e

    i_best = int(np.argmax(ks))
    argmax_q2, k_max = float(q2s[i_best]), float(ks[i_best])

    # Refine only when the scan brackets an interior peak
    if 0 < i_best < n - 1 and ks[i_best] > ks[i_best - 1] and ks[i_best] > ks[i_best + 1]:
        bracket = (float(q2s[i_best - 1]), argmax_q2, float(q2s[i_best + 1]))
        res = minimize_scalar(
            lambda q: -reduction_ratio(params, q),
            bracket=bracket,
            method="golden",
            options={"xtol": ARGMAX_TOL_RAD / 10},
        )
        if -res.fun >= k_max:
            argmax_q2, k_max = float(res.x), float(-res.fun)

    samples = tuple((float(q), float(k)) for q, k in zip(q2s, ks))
    logger.debug("[Mechanism] %s peak k=%.4f at q2=%.6f", params.describe(), k_max, argmax_q2)
    return RatioCurve(params=params, samples=samples, argmax_q2=argmax_q2, k_max=k_max, q2=q2s, k=ks)


def sweep_r(r_values: Sequence[float], S0: float, n: int = 2000, delta_theta: float = 0.0, Q: float = LEAD_MM / 1000.0):
    """Ratio curves over the full working range for several crank lengths."""
    curves = []
    for r in r_values:
        p = VrrParams(r=r, S0=S0, delta_theta=delta_theta, Q=Q)
        curves.append(ratio_curve(p, *working_range(p), n))
    return curves


def sweep_s0(s0_values: Sequence[float], r: float, n: int = 2000, delta_theta: float = 0.0, Q: float = LEAD_MM / 1000.0):
    """Ratio curves over the full working range for several frame lengths."""
    curves = []
    for s0 in s0_values:
        p = VrrParams(r=r, S0=s0, delta_theta=delta_theta, Q=Q)
        curves.append(ratio_curve(p, *working_range(p), n))
    return curves


def effective_overall_ratio(params: Mechanism, model: LegModel, q2: float) -> float:
    """Motor radians per metre of CoM rise, k(q2) * lambda(q2)."""
    lam = knee_to_com_ratio(model, q2)
    if isinstance(params, FrrParams):
        return params.k_fixed * lam
    return reduction_ratio(params, q2) * lam


def mechanism_ratio(params: Mechanism, q2: float) -> float:
    if isinstance(params, FrrParams):
        return params.k_fixed
    return reduction_ratio(params, q2)
