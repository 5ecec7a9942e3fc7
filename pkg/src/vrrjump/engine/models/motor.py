"""Parametric PMSM output model: torque/power envelope, losses, transmission."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from ...config import (
    C_IRON1,
    C_IRON2,
    ETA_J,
    HPL_FRACTION,
    I_Q_PEAK_A,
    OMEGA_MAX_RPM,
    P_PEAK_W,
    R_PHASE_OHM,
    TAU_PEAK_NM,
)
from ...errors import DomainError
from ..utils import rpm_to_rads

CONSISTENCY_TOL = 0.02


@dataclass(frozen=True)
class MotorParams:
    tau_peak: float
    i_q_peak: float
    k_t: float
    p_peak: float
    omega_break: float
    omega_max: float
    r_phase: float = R_PHASE_OHM
    c_iron1: float = C_IRON1
    c_iron2: float = C_IRON2
    eta_j: float = ETA_J
    # onset of high-speed derating; None -> HPL_FRACTION * omega_max
    omega_hpl: float | None = None

    def __post_init__(self):
        if self.omega_hpl is None:
            object.__setattr__(self, "omega_hpl", HPL_FRACTION * self.omega_max)
        if not (0 < self.omega_break < self.omega_max):
            raise DomainError(
                f"MotorParams: need 0 < omega_break < omega_max "
                f"(omega_break={self.omega_break}, omega_max={self.omega_max})"
            )
        if not (0 < self.omega_hpl < self.omega_max):
            raise DomainError(f"MotorParams: need 0 < omega_hpl < omega_max (omega_hpl={self.omega_hpl})")
        if self.tau_peak < 0 or self.p_peak < 0:
            raise DomainError(f"MotorParams: tau_peak and p_peak must be >= 0 ({self.tau_peak}, {self.p_peak})")
        if self.k_t <= 0 or self.i_q_peak <= 0:
            raise DomainError(f"MotorParams: k_t and i_q_peak must be > 0 ({self.k_t}, {self.i_q_peak})")
        if not (0 < self.eta_j <= 1):
            raise DomainError(f"MotorParams: need 0 < eta_j <= 1 (eta_j={self.eta_j})")
        if min(self.r_phase, self.c_iron1, self.c_iron2) < 0:
            raise DomainError("MotorParams: loss coefficients must be >= 0")

    @classmethod
    def from_peaks(
        cls,
        tau_peak: float = TAU_PEAK_NM,
        p_peak: float = P_PEAK_W,
        i_q_peak: float = I_Q_PEAK_A,
        omega_max: float = rpm_to_rads(OMEGA_MAX_RPM),
        **kwargs,
    ) -> "MotorParams":
        """Motor with corner speed p_peak/tau_peak and K_T = tau_peak/i_q_peak."""
        omega_hpl = kwargs.pop("omega_hpl", None) or HPL_FRACTION * omega_max
        if tau_peak > 0:
            omega_break = min(p_peak / tau_peak, omega_hpl)
            k_t = tau_peak / i_q_peak
        else:
            omega_break = omega_hpl
            k_t = TAU_PEAK_NM / I_Q_PEAK_A
        return cls(
            tau_peak=tau_peak,
            i_q_peak=i_q_peak,
            k_t=k_t,
            p_peak=p_peak,
            omega_break=omega_break,
            omega_max=omega_max,
            omega_hpl=omega_hpl,
            **kwargs,
        )

    def check_consistency(self):
        """Corner continuity and torque constant within 2 %; raises DomainError."""
        if self.tau_peak <= 0 or self.p_peak <= 0:
            raise DomainError("MotorParams: tau_peak and p_peak must be > 0")
        corner = self.tau_peak * self.omega_break
        if abs(corner - self.p_peak) > CONSISTENCY_TOL * self.p_peak:
            raise DomainError(
                f"MotorParams: tau_peak*omega_break={corner:.1f} W differs from p_peak={self.p_peak:.1f} W by more than 2%"
            )
        kt_torque = self.k_t * self.i_q_peak
        if abs(kt_torque - self.tau_peak) > CONSISTENCY_TOL * self.tau_peak:
            raise DomainError(
                f"MotorParams: k_t*i_q_peak={kt_torque:.3f} Nm differs from tau_peak={self.tau_peak:.3f} Nm by more than 2%"
            )

    def scaled(self, **changes) -> "MotorParams":
        return replace(self, **changes)


def default_motor() -> MotorParams:
    return MotorParams.from_peaks()


@dataclass(frozen=True)
class EnvelopePoint:
    omega: float
    tau_max: float
    p_out: float
    p_loss: float


def _derate(params: MotorParams, omega: float) -> float:
    if omega <= params.omega_hpl:
        return 1.0
    d = (params.omega_max - omega) / (params.omega_max - params.omega_hpl)
    return min(max(d, 0.0), 1.0)


def max_torque(params: MotorParams, omega: float) -> float:
    """Available motor torque at speed |omega| (Nm)."""
    if omega < 0 or math.isnan(omega):
        raise DomainError(f"max_torque: omega must be >= 0 (got {omega}); pass the magnitude")
    if omega >= params.omega_max:
        return 0.0
    if omega <= params.omega_break:
        base = params.tau_peak
    else:
        base = min(params.tau_peak, params.p_peak / omega)
    return base * _derate(params, omega)


def power_loss(params: MotorParams, i_q: float, omega: float) -> float:
    """Copper + iron + mechanical loss (W)."""
    w = abs(omega)
    return 1.5 * params.r_phase * i_q * i_q + params.c_iron1 * w + params.c_iron2 * w * w


def joint_torque(params: MotorParams, tau_m: float, k: float) -> float:
    if k < 0:
        raise DomainError(f"joint_torque: k must be >= 0 (k={k})")
    return tau_m * k * params.eta_j


def joint_power(params: MotorParams, p_m: float) -> float:
    return params.eta_j * p_m


def envelope_table(params: MotorParams, n: int) -> List[EnvelopePoint]:
    """n uniform samples of omega in [0, omega_max] along the envelope."""
    if n < 2:
        raise DomainError(f"envelope_table: need n >= 2 (n={n})")
    rows = []
    for w in np.linspace(0.0, params.omega_max, n):
        w = float(w)
        tau = max_torque(params, w)
        i_q = tau / params.k_t
        rows.append(EnvelopePoint(omega=w, tau_max=tau, p_out=tau * w, p_loss=power_loss(params, i_q, w)))
    return rows
