"""
Energy, relative energy and the constants of their norm equivalence.

All integrals use the midpoint rule on the cell centres and are summed over
edges. The L2 distance of two states is ``||rho - rho_hat||**2 + ||v - v_hat||**2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..constants import DIAGNOSTIC
from ..exceptions import DiagnosticsError
from ..models.pressure import BoundConstants, PressureLaw, positive_density
from ..models.state import FieldState
from ..models.types import ArrayLike, FloatArray
from ..utils.unified_logger import get_logger

logger = get_logger(__name__)


def _check_pair(obs: FieldState, truth: FieldState) -> None:
    if not obs.same_grid(truth):
        raise DiagnosticsError("grid mismatch", {"t_obs": obs.t, "t_truth": truth.t})


def integrate_edges(state: FieldState, integrand: dict[str, FloatArray]) -> float:
    return float(sum(np.sum(integrand[e]) * state.grid[e].dx for e in state.grid))


def energy(law: PressureLaw, state: FieldState) -> float:
    """Integral of ``rho v**2 / 2 + P(rho)``."""
    density = {}
    for e in state.grid:
        rho = positive_density(state.rho[e])
        density[e] = 0.5 * rho * state.v[e] ** 2 + np.asarray(law.P(rho))
    return integrate_edges(state, density)


def relative_energy(law: PressureLaw, obs: FieldState, truth: FieldState) -> float:
    """``H(u_hat) - H(u) - <H'(u), u_hat - u>`` with ``H'(u) = (h, m)``."""
    _check_pair(obs, truth)
    density = {}
    for e in truth.grid:
        rho, v = positive_density(truth.rho[e]), truth.v[e]
        rho_hat, v_hat = positive_density(obs.rho[e]), obs.v[e]
        h = 0.5 * v**2 + np.asarray(law.dP(rho))
        density[e] = (
            0.5 * rho_hat * v_hat**2
            - 0.5 * rho * v**2
            + np.asarray(law.P(rho_hat))
            - np.asarray(law.P(rho))
            - h * (rho_hat - rho)
            - rho * v * (v_hat - v)
        )
    return integrate_edges(truth, density)


def relative_pressure(law: PressureLaw, rho_hat: ArrayLike, rho: ArrayLike) -> FloatArray:
    """``P(rho_hat | rho) = P(rho_hat) - P(rho) - P'(rho)(rho_hat - rho)``."""
    r_hat, r = positive_density(rho_hat), positive_density(rho)
    return (
        np.asarray(law.P(r_hat)) - np.asarray(law.P(r)) - np.asarray(law.dP(r)) * (r_hat - r)
    )


def relative_energy_density_split(
    law: PressureLaw, rho_hat: ArrayLike, v_hat: ArrayLike, rho: ArrayLike, v: ArrayLike
) -> FloatArray:
    """Pointwise ``rho_hat dv**2 / 2 + P(rho_hat | rho) + v drho dv``."""
    d_rho = np.asarray(rho_hat) - np.asarray(rho)
    d_v = np.asarray(v_hat) - np.asarray(v)
    return (
        0.5 * np.asarray(rho_hat) * d_v**2
        + relative_pressure(law, rho_hat, rho)
        + np.asarray(v) * d_rho * d_v
    )


def l2_error_sq(obs: FieldState, truth: FieldState) -> float:
    _check_pair(obs, truth)
    density = {
        e: (obs.rho[e] - truth.rho[e]) ** 2 + (obs.v[e] - truth.v[e]) ** 2 for e in truth.grid
    }
    return integrate_edges(truth, density)


def total_mass(state: FieldState) -> float:
    return integrate_edges(state, dict(state.rho))


def mass_difference(obs: FieldState, truth: FieldState) -> float:
    """``int rho - int rho_hat`` over the network."""
    _check_pair(obs, truth)
    return total_mass(truth) - total_mass(obs)


def mass_plateau(delta_m0: float, total_length: float) -> float:
    """Squared L2 error left once a mass-conserving observer has settled.

    Velocity and mass-flow measurements cannot move mass into or out of a
    closed network, so the observer relaxes to a state whose density differs
    from the truth by ``delta_m0 / total_length`` everywhere; the squared
    error then levels off at ``delta_m0**2 / total_length``.
    """
    if total_length <= 0.0:
        raise DiagnosticsError("network length must be positive", {"length": total_length})
    return delta_m0 * delta_m0 / total_length


def norm_equiv_constants(bounds: BoundConstants) -> tuple[float, float]:
    """(c0, C0) with ``c0 ||u - u_hat||**2 <= H(u_hat | u) <= C0 ||u - u_hat||**2``.

    The relative energy density is the quadratic form
    ``1/2 [drho, dv] [[P''(xi), v], [v, rho_hat]] [drho, dv]^T`` for some xi
    between rho and rho_hat; the constants are half the extreme eigenvalues
    over the band and ``|v| <= v_bar``.

    Raises:
        DiagnosticsError: if the lower constant is not positive
    """
    a_lo, b_lo = bounds.d2P_lo, bounds.rho_lo
    a_hi, b_hi = bounds.d2P_hi, bounds.rho_hi
    v2 = bounds.v_bar**2
    c0 = 0.5 * (0.5 * (a_lo + b_lo) - np.sqrt((0.5 * (a_lo - b_lo)) ** 2 + v2))
    big_c0 = 0.5 * (0.5 * (a_hi + b_hi) + np.sqrt((0.5 * (a_hi - b_hi)) ** 2 + v2))
    if c0 <= 0.0:
        raise DiagnosticsError(
            "subsonic window violated: no positive lower constant",
            {"c0": float(c0), "v_bar": bounds.v_bar},
        )
    return float(c0), float(big_c0)


def select_delta(
    c0: float, bounds: BoundConstants, mu: float, gamma: float, length: float
) -> float:
    """Weight of the auxiliary functional in the Lyapunov function."""
    poincare = DIAGNOSTIC.POINCARE
    equivalence = c0 / (poincare * length)
    scale = (poincare * length) ** 2
    decrease = (
        0.25
        * mu
        * bounds.rho_lo
        / (
            2.0 * bounds.rho_hi
            + scale * mu**2 / bounds.d2P_lo
            + scale * gamma**2 * bounds.rho_lo
        )
    )
    logger.debug("delta candidates", equivalence=equivalence, decrease=decrease)
    return float(min(equivalence, decrease))


def nominal_rate(delta: float, bounds: BoundConstants, mu: float) -> float:
    """Decay-rate indicator ``min(delta P''_lo / 8, mu rho_lo / 4)``."""
    return float(min(delta * bounds.d2P_lo / 8.0, mu * bounds.rho_lo / 4.0))


@dataclass(frozen=True)
class EnergyReport:
    H_truth: float  # noqa: N815
    H_obs: float  # noqa: N815
    H_rel: float  # noqa: N815
    f_aux: float
    lyapunov: float
    delta: float
    l2_err_sq: float
    c0: float
    C0: float  # noqa: N815

    @property
    def equivalence_holds(self) -> bool:
        slack = 1e-12 * max(1.0, self.l2_err_sq)
        return (
            self.c0 * self.l2_err_sq - slack <= self.H_rel <= self.C0 * self.l2_err_sq + slack
        )

    def to_dict(self) -> dict[str, float | bool]:
        return {**asdict(self), "equivalence_holds": self.equivalence_holds}


def energy_report(
    law: PressureLaw,
    obs: FieldState,
    truth: FieldState,
    f_aux: float,
    delta: float,
    constants: tuple[float, float],
) -> EnergyReport:
    h_rel = relative_energy(law, obs, truth)
    return EnergyReport(
        H_truth=energy(law, truth),
        H_obs=energy(law, obs),
        H_rel=h_rel,
        f_aux=f_aux,
        lyapunov=h_rel + delta * f_aux,
        delta=delta,
        l2_err_sq=l2_error_sq(obs, truth),
        c0=constants[0],
        C0=constants[1],
    )
