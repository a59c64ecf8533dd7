"""
Luenberger nudging terms.

The observer copies the dynamics and adds sources (L_rho, L_v) driven by the
mismatch between the measured field of the truth and its own estimate.
Physical and Riemann-invariant forms are both provided; the mass-flow term
is not linear in (S+, S-) and is projected with the left eigenvectors
``l+- = (sqrt(p'(rho_hat)) / (c rho_hat), +-1/c)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ValidationError
from ..models.pressure import PressureLaw, positive_density
from ..models.types import ArrayLike, FloatArray, MeasurementMode, RiemannPair
from .riemann import from_riemann


@dataclass(frozen=True)
class Measurement:
    """Measured field and nudging gain."""

    mode: MeasurementMode
    mu: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu) or self.mu < 0.0:
            raise ValidationError("nudging parameter negative or not finite", {"mu": self.mu})

    @property
    def active(self) -> bool:
        return self.mode is not MeasurementMode.NONE and self.mu > 0.0

    @property
    def damping_rate(self) -> float:
        """Rate of the exponential integrating factor; only linear modes have one."""
        if self.active and self.mode in (MeasurementMode.VELOCITY, MeasurementMode.DENSITY):
            return 0.5 * self.mu
        return 0.0


def _arrays(*values: ArrayLike) -> list[FloatArray]:
    return [np.asarray(v, dtype=np.float64) for v in values]


def nudging_physical(
    law: PressureLaw,
    measurement: Measurement,
    truth: tuple[ArrayLike, ArrayLike],
    obs: tuple[ArrayLike, ArrayLike],
) -> tuple[FloatArray, FloatArray]:
    """(L_rho, L_v) for the measured field."""
    rho, v, rho_hat, v_hat = _arrays(truth[0], truth[1], obs[0], obs[1])
    positive_density(rho)
    positive_density(rho_hat)
    zeros = np.zeros(np.broadcast(rho, rho_hat).shape)
    mu = measurement.mu
    match measurement.mode:
        case MeasurementMode.VELOCITY:
            return zeros, mu * (v - v_hat)
        case MeasurementMode.DENSITY:
            gap = np.asarray(law.ptilde(rho)) - np.asarray(law.ptilde(rho_hat))
            scale = law.sound_scale / np.sqrt(np.asarray(law.dp(rho_hat)))
            return mu * scale * rho_hat * gap, zeros
        case MeasurementMode.MASSFLOW:
            return zeros, mu * (rho * v - rho_hat * v_hat)
    return zeros, zeros.copy()


def project_riemann(
    law: PressureLaw, rho_hat: ArrayLike, l_rho: ArrayLike, l_v: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Left-eigenvector projection of physical sources onto S+ and S-."""
    r, lr, lv = _arrays(rho_hat, l_rho, l_v)
    c = law.sound_scale
    k = np.sqrt(np.asarray(law.dp(r))) / (c * r)
    return k * lr + lv / c, k * lr - lv / c


def nudging_riemann(
    law: PressureLaw,
    measurement: Measurement,
    truth_pair: RiemannPair,
    obs_pair: RiemannPair,
) -> tuple[FloatArray, FloatArray]:
    """Nudging sources of the S+ and S- equations."""
    r_plus, r_minus, s_plus, s_minus = _arrays(*truth_pair, *obs_pair)
    mu = measurement.mu
    match measurement.mode:
        case MeasurementMode.VELOCITY:
            term = 0.5 * mu * (r_plus - r_minus - s_plus + s_minus)
            return term, -term
        case MeasurementMode.DENSITY:
            term = 0.5 * mu * (r_plus + r_minus - s_plus - s_minus)
            return term, term.copy()
        case MeasurementMode.MASSFLOW:
            truth = from_riemann(law, truth_pair)
            obs = from_riemann(law, obs_pair)
            l_rho, l_v = nudging_physical(law, measurement, truth, obs)
            return project_riemann(law, obs[0], l_rho, l_v)
    zeros = np.zeros(np.broadcast(s_plus, r_plus).shape)
    return zeros, zeros.copy()
