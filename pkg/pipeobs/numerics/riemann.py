"""
Riemann invariants and eigenstructure of the barotropic Euler system.

    S+- = P~(rho) +- v / c,   v = c/2 (S+ - S-),   rho = P~^{-1}((S+ + S-)/2)
    lambda+- = v +- sqrt(p'(rho))
"""

from __future__ import annotations

import numpy as np

from ..exceptions import SmallDataError
from ..models.pressure import (
    BoundConstants,
    PressureLaw,
    match_input,
    positive_density,
    ptilde_inv,
)
from ..models.types import ArrayLike, EigenBounds, RiemannPair


def to_riemann(law: PressureLaw, rho: ArrayLike, v: ArrayLike) -> RiemannPair:
    y = law.ptilde(rho)
    w = np.asarray(v, dtype=np.float64) / law.sound_scale
    return RiemannPair(match_input(rho, y + w), match_input(rho, y - w))


def from_riemann(law: PressureLaw, pair: RiemannPair) -> tuple[ArrayLike, ArrayLike]:
    """Recover (rho, v); raises ``OutOfBandError`` through the P~ inversion."""
    s_plus = np.asarray(pair.S_plus, dtype=np.float64)
    s_minus = np.asarray(pair.S_minus, dtype=np.float64)
    rho = ptilde_inv(law, 0.5 * (s_plus + s_minus))
    v = 0.5 * law.sound_scale * (s_plus - s_minus)
    return match_input(pair.S_plus, np.asarray(rho)), match_input(pair.S_plus, v)


def eigenvalues(law: PressureLaw, rho: ArrayLike, v: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    r = positive_density(rho)
    speed = np.sqrt(np.asarray(law.dp(r)))
    vel = np.asarray(v, dtype=np.float64)
    return match_input(rho, vel + speed), match_input(rho, vel - speed)


def enthalpy(law: PressureLaw, rho: ArrayLike, v: ArrayLike) -> ArrayLike:
    vel = np.asarray(v, dtype=np.float64)
    return match_input(rho, 0.5 * vel**2 + np.asarray(law.dP(rho)))


def friction_sigma(law: PressureLaw, pair: RiemannPair, gamma: float) -> ArrayLike:
    """sigma = gamma c/4 |S+ - S-| (S+ - S-), which equals (gamma/c)|v|v."""
    d = np.asarray(pair.S_plus, dtype=np.float64) - np.asarray(pair.S_minus, dtype=np.float64)
    return match_input(pair.S_plus, gamma * law.sound_scale / 4.0 * np.abs(d) * d)


def eigen_bounds(law: PressureLaw, s_max: float, bounds: BoundConstants) -> EigenBounds:
    """Bounds on lambda+ and the Lipschitz constant of lambda+- in (S+, S-).

    Raises:
        SmallDataError: if c * S_max > sqrt(C_p'_lo) / 2
    """
    c = law.sound_scale
    if c * s_max > 0.5 * np.sqrt(bounds.dp_lo):
        raise SmallDataError(
            "small-data condition failed",
            {"c_S_max": c * s_max, "limit": 0.5 * np.sqrt(bounds.dp_lo)},
        )
    lam_lo = 0.5 * np.sqrt(bounds.dp_lo)
    lam_hi = 1.5 * np.sqrt(bounds.dp_hi)
    lipschitz = c / 2.0 + c * bounds.rho_hi / (4.0 * bounds.dp_lo) * bounds.d2p_max
    return EigenBounds(float(lam_lo), float(lam_hi), float(lipschitz))
