"""Exception hierarchy shared by every module."""
from __future__ import annotations

from typing import Any


class VrrJumpError(Exception):
    """Base class for all errors raised by vrrjump."""


class DomainError(VrrJumpError, ValueError):
    """An argument lies outside the domain of an operation or type."""


class SingularityError(DomainError):
    """Knee-to-CoM ratio requested past the extension cap."""

    def __init__(self, q2: float, cap: float):
        super().__init__(
            f"knee angle q2={q2:.6g} rad is beyond the singularity cap {cap:.6g} rad"
        )
        self.q2 = q2
        self.cap = cap


class RangeError(DomainError):
    """Crank angle outside the linkage working range."""


class DegenerateGeometryError(DomainError):
    """Linkage radicand is not strictly positive."""


class ConfigError(VrrJumpError):
    """Run configuration could not be parsed or validated."""

    def __init__(
        self,
        message: str,
        key: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ):
        where = ""
        if line is not None:
            where = f"line {line}, column {column}: "
        elif key:
            where = f"{key}: "
        super().__init__(where + message)
        self.key = key
        self.line = line
        self.column = column


class InfeasibleSearchError(VrrJumpError):
    """No candidate in the search box passed the working-range guard."""


class SimulationError(VrrJumpError):
    """Simulation aborted; ``last_state`` is the last valid sample."""

    def __init__(self, message: str, last_state: Any = None):
        super().__init__(message)
        self.last_state = last_state
