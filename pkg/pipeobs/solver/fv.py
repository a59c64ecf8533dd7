"""
First-order finite-volume reference stepper in conservative variables.

Interior faces use the local Lax-Friedrichs flux of

    rho_t + m_x = L_rho
    m_t + (m**2/rho + p(rho))_x = -gamma |m| m / rho + rho L_v + v L_rho

Boundary faces take the physical flux of the node state, which is resolved
from the invariant the outermost cell sends towards the node. Total mass
therefore changes only through the boundary faces.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DomainError, JunctionError, OutOfBandError, SolverError
from ..models.pressure import PressureLaw
from ..models.state import FieldState, convert_conservative, convert_primitive
from ..models.types import FloatArray, RiemannPair
from ..numerics.observer import Measurement, nudging_physical
from ..numerics.riemann import from_riemann, to_riemann
from .base import TwinState, check_cfl
from .nodes import End, EndKey, NodeResolver, end_pairs


def physical_flux(
    law: PressureLaw, rho: FloatArray, m: FloatArray
) -> tuple[FloatArray, FloatArray]:
    return m, m**2 / rho + np.asarray(law.p(rho))


def llf_flux(
    law: PressureLaw, rho: FloatArray, m: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Fluxes at the N-1 interior faces of one edge."""
    f_rho, f_m = physical_flux(law, rho, m)
    speed = np.abs(m / rho) + np.sqrt(np.asarray(law.dp(rho)))
    alpha = np.maximum(speed[:-1], speed[1:])
    flux_rho = 0.5 * (f_rho[:-1] + f_rho[1:]) - 0.5 * alpha * (rho[1:] - rho[:-1])
    flux_m = 0.5 * (f_m[:-1] + f_m[1:]) - 0.5 * alpha * (m[1:] - m[:-1])
    return flux_rho, flux_m


def node_states(
    law: PressureLaw, state: FieldState, resolver: NodeResolver
) -> dict[EndKey, tuple[float, float]]:
    """(S+, S-) at every edge end, resolved at time ``state.t``."""
    incoming: dict[EndKey, float] = {}
    for edge_id in state.grid:
        s_plus, s_minus = to_riemann(law, state.rho[edge_id], state.v[edge_id])
        incoming[(edge_id, End.START)] = float(np.asarray(s_minus)[0])
        incoming[(edge_id, End.END)] = float(np.asarray(s_plus)[-1])
    outgoing = resolver.resolve(incoming, state.t)
    return end_pairs(incoming, outgoing)


def boundary_flux(
    law: PressureLaw, pairs: dict[EndKey, tuple[float, float]], edge_id: str
) -> tuple[FloatArray, FloatArray]:
    """Physical fluxes at x = 0 and x = l as length-2 arrays."""
    s_plus = np.array([pairs[(edge_id, End.START)][0], pairs[(edge_id, End.END)][0]])
    s_minus = np.array([pairs[(edge_id, End.START)][1], pairs[(edge_id, End.END)][1]])
    rho, v = from_riemann(law, RiemannPair(s_plus, s_minus))
    rho_b = np.asarray(rho)
    return physical_flux(law, rho_b, rho_b * np.asarray(v))


def fv_update(
    law: PressureLaw,
    state: FieldState,
    resolver: NodeResolver,
    dt: float,
    gamma: float,
    measurement: Measurement | None = None,
    truth: FieldState | None = None,
) -> FieldState:
    """One step of a single system; ``measurement`` and ``truth`` switch on nudging."""
    pairs = node_states(law, state, resolver)
    rho_new: dict[str, FloatArray] = {}
    v_new: dict[str, FloatArray] = {}
    traces: dict[str, FloatArray] = {}
    for edge_id, eg in state.grid.edges.items():
        rho, m = convert_conservative(state.rho[edge_id], state.v[edge_id])
        v = state.v[edge_id]
        inner_rho, inner_m = llf_flux(law, rho, m)
        bnd_rho, bnd_m = boundary_flux(law, pairs, edge_id)
        flux_rho = np.concatenate(([bnd_rho[0]], inner_rho, [bnd_rho[1]]))
        flux_m = np.concatenate(([bnd_m[0]], inner_m, [bnd_m[1]]))

        src_rho = np.zeros_like(rho)
        src_m = -gamma * np.abs(m) * m / rho
        if measurement is not None and measurement.active and truth is not None:
            l_rho, l_v = nudging_physical(
                law, measurement, (truth.rho[edge_id], truth.v[edge_id]), (rho, v)
            )
            src_rho = src_rho + l_rho
            src_m = src_m + rho * l_v + v * l_rho

        lam = dt / eg.dx
        rho_next = rho - lam * np.diff(flux_rho) + dt * src_rho
        m_next = m - lam * np.diff(flux_m) + dt * src_m
        rho_new[edge_id], v_new[edge_id] = convert_primitive(rho_next, m_next)
        traces[edge_id] = np.array(
            [pairs[(edge_id, End.START)], pairs[(edge_id, End.END)]], dtype=np.float64
        )
    new_state = FieldState(state.t + dt, state.grid, rho_new, v_new, traces)
    new_state.check_admissible()
    return new_state


def step_fv(twin: TwinState, dt: float) -> TwinState:
    """Advance truth and observer by one finite-volume step.

    Raises:
        SolverError: as ``step_moc``
    """
    scenario = twin.scenario
    law = scenario.law
    check_cfl(law, twin.truth, dt, scenario.cfl, twin.step)
    check_cfl(law, twin.observer, dt, scenario.cfl, twin.step)
    try:
        truth = fv_update(law, twin.truth, twin.resolvers.truth, dt, scenario.gamma)
        observer = fv_update(
            law,
            twin.observer,
            twin.resolvers.observer,
            dt,
            scenario.gamma,
            twin.measurement,
            twin.truth,
        )
    except SolverError as e:
        e.details.update(twin.context())
        raise
    except (JunctionError, OutOfBandError, DomainError) as e:
        raise SolverError(f"finite-volume step failed: {e}", twin.context(**e.details)) from e
    return twin.advanced(truth, observer, dt)
