"""Simplified 1-DOF leg: knee angle to vertical CoM height, velocity and force.

The hip and ankle are passive and constrained to vertical motion, so the CoM
height is a function of the knee angle alone::

    y(q2) = Y * cos(q2 / 2)        J(q2) = dy/dq2 = (Y / 2) * |sin(q2 / 2)|

``Y`` is the fully-extended CoM height:

- ``paper``: ``Y = 2C``, so J is the literal Jacobian magnitude ``C |sin(q2/2)|``
- ``geometric``: ``Y = C``, the mass-weighted lever as the height amplitude
- ``hip``: ``Y = l1 + l2``, the whole mass rides on the hip, whose height is
  ``(l1 + l2) cos(q2/2)`` for equal links
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ...config import GRAVITY, Q2_CAP_RAD
from ...errors import DomainError, SingularityError


class JacobianMode(str, Enum):
    PAPER = "paper"
    GEOMETRIC = "geometric"
    HIP = "hip"

    @classmethod
    def _missing_(cls, value):
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        if key in ("paper", "paperliteral", "literal"):
            return cls.PAPER
        if key in ("geometric", "geometry"):
            return cls.GEOMETRIC
        if key in ("hip", "hipheight"):
            return cls.HIP
        return None


@dataclass(frozen=True)
class LegModel:
    l1: float
    l2: float
    a1: float
    a2: float
    m1: float
    m2: float
    m3: float
    g: float = GRAVITY
    jacobian_mode: JacobianMode = JacobianMode.PAPER
    q2_cap: float = Q2_CAP_RAD

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise DomainError(f"LegModel: link lengths must be > 0 (l1={self.l1}, l2={self.l2})")
        if not (0 <= self.a1 <= self.l1):
            raise DomainError(f"LegModel: need 0 <= a1 <= l1 (a1={self.a1}, l1={self.l1})")
        if not (0 <= self.a2 <= self.l2):
            raise DomainError(f"LegModel: need 0 <= a2 <= l2 (a2={self.a2}, l2={self.l2})")
        if min(self.m1, self.m2, self.m3) <= 0:
            raise DomainError(f"LegModel: masses must be > 0 (m1={self.m1}, m2={self.m2}, m3={self.m3})")
        if self.g <= 0:
            raise DomainError(f"LegModel: g must be > 0 (g={self.g})")
        if not (-math.pi < self.q2_cap < 0):
            raise DomainError(f"LegModel: q2_cap must lie in (-pi, 0) (q2_cap={self.q2_cap})")
        # accept plain strings from config / CLI
        object.__setattr__(self, "jacobian_mode", JacobianMode(self.jacobian_mode))

    @classmethod
    def uniform(cls, l1: float, l2: float, m1: float, m2: float, m3: float, **kwargs) -> "LegModel":
        """Links with uniform mass distribution (CoM at mid-length)."""
        return cls(l1=l1, l2=l2, a1=l1 / 2, a2=l2 / 2, m1=m1, m2=m2, m3=m3, **kwargs)

    def total_mass(self) -> float:
        return self.m1 + self.m2 + self.m3


@dataclass(frozen=True)
class KneeState:
    q2: float
    dq2: float

    def __post_init__(self):
        _check_domain(self.q2)


def _check_domain(q2: float):
    if not (-math.pi <= q2 <= 0.0):
        raise DomainError(f"knee angle q2={q2!r} rad outside [-pi, 0]")


def com_constant(model: LegModel) -> float:
    """Mass-weighted lever C = [a1 m1 + (l1 + a2) m2 + (l1 + l2) m3] / m_tot."""
    num = model.a1 * model.m1 + (model.l1 + model.a2) * model.m2 + (model.l1 + model.l2) * model.m3
    return num / model.total_mass()


def height_amplitude(model: LegModel) -> float:
    mode = model.jacobian_mode
    if mode is JacobianMode.HIP:
        return model.l1 + model.l2
    c = com_constant(model)
    return 2.0 * c if mode is JacobianMode.PAPER else c


# Unchecked forms for the integrator (stages may sit a hair outside the domain).
def _jacobian(amp: float, q2: float) -> float:
    return -0.5 * amp * math.sin(0.5 * q2)


def _jacobian_rate(amp: float, q2: float) -> float:
    return -0.25 * amp * math.cos(0.5 * q2)


def _height(amp: float, q2: float) -> float:
    return amp * math.cos(0.5 * q2)


def com_jacobian(model: LegModel, q2: float) -> float:
    """dy_CoM/dq2 (m/rad); zero at full extension."""
    _check_domain(q2)
    return abs(_jacobian(height_amplitude(model), q2))


def com_jacobian_rate(model: LegModel, q2: float) -> float:
    """d(com_jacobian)/dq2; J_dot = com_jacobian_rate * dq2."""
    _check_domain(q2)
    return _jacobian_rate(height_amplitude(model), q2)


def knee_to_com_ratio(model: LegModel, q2: float) -> float:
    """lambda(q2) = 1 / J(q2) in rad/m, guarded by ``model.q2_cap``."""
    _check_domain(q2)
    if q2 > model.q2_cap:
        raise SingularityError(q2, model.q2_cap)
    return 1.0 / com_jacobian(model, q2)


def com_height(model: LegModel, q2: float) -> float:
    _check_domain(q2)
    return _height(height_amplitude(model), q2)


def standing_height(model: LegModel) -> float:
    """CoM height with the leg fully extended (y_CoM,s)."""
    return com_height(model, 0.0)


def com_velocity(model: LegModel, state: KneeState) -> float:
    # signed: extension (dq2 > 0) lifts the CoM
    return com_jacobian(model, state.q2) * state.dq2


def com_force(model: LegModel, q2: float, tau_joint: float) -> float:
    """Upward force the knee torque exerts on the CoM, before gravity."""
    return tau_joint * knee_to_com_ratio(model, q2)
