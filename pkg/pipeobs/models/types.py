"""
Type definitions shared across pipeobs.

Tags are ``StrEnum`` members so they round-trip through JSON unchanged.
"""

from __future__ import annotations

from enum import StrEnum, unique
from typing import NamedTuple, TypeAlias

import numpy as np
import numpy.typing as npt

FloatArray: TypeAlias = npt.NDArray[np.float64]
ArrayLike: TypeAlias = float | FloatArray


@unique
class NodeKind(StrEnum):
    BOUNDARY = "boundary"
    INNER = "inner"


@unique
class LawKind(StrEnum):
    ISOTHERMAL = "isothermal"
    POWER = "power"


@unique
class MeasurementMode(StrEnum):
    """Which field of the true state the observer measures."""

    VELOCITY = "velocity"
    DENSITY = "density"
    MASSFLOW = "massflow"
    NONE = "none"


@unique
class BoundaryQuantity(StrEnum):
    MASSFLOW = "m"
    ENTHALPY = "h"


@unique
class StepperKind(StrEnum):
    MOC = "moc"
    FV = "fv"


@unique
class Family(StrEnum):
    PLUS = "+"
    MINUS = "-"

    @property
    def sign(self) -> int:
        return 1 if self is Family.PLUS else -1


class RiemannPair(NamedTuple):
    """Riemann invariants S+ = P~(rho) + v/c and S- = P~(rho) - v/c."""

    S_plus: ArrayLike
    S_minus: ArrayLike


class LawBundle(NamedTuple):
    p: ArrayLike
    dp: ArrayLike
    P: ArrayLike
    dP: ArrayLike
    d2P: ArrayLike
    ptilde: ArrayLike


class EigenBounds(NamedTuple):
    lam_lo: float
    lam_hi: float
    lipschitz: float
