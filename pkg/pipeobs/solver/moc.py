"""
Method-of-characteristics stepper in Riemann invariants.

Each edge works on the augmented grid ``[0, centres, l]``: the cell values
plus the invariant traces at both ends. A step traces every foot back with
the frozen wave speed of time t, interpolates linearly and applies the
exponential integrating factor of the damping term:

    S(t+dt, x) = exp(-a dt) S(t, x_f) + dt exp(-a dt/2) Q(t, x_f)

with ``Q+- = -+sigma + b+- + a S+-`` and ``a`` the damping rate of the
measurement (zero for the truth and for mass-flow measurement). Feet that
leave the edge take the boundary value interpolated in time between the old
and the new node solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError, JunctionError, OutOfBandError, SolverError
from ..models.pressure import PressureLaw
from ..models.state import FieldState
from ..models.types import FloatArray, RiemannPair
from ..numerics.observer import Measurement, nudging_riemann
from ..numerics.riemann import eigenvalues, friction_sigma, from_riemann, to_riemann
from ..utils.unified_logger import get_logger
from .base import TwinState, check_cfl
from .nodes import End, EndKey, NodeResolver

logger = get_logger(__name__)

BoundaryPair = tuple[float, float] | None


@dataclass(frozen=True)
class EdgeWork:
    """Augmented-grid data of one edge at time t."""

    xs: FloatArray
    s_plus: FloatArray
    s_minus: FloatArray
    lam_plus: FloatArray
    lam_minus: FloatArray
    q_plus: FloatArray
    q_minus: FloatArray
    rate: float

    @property
    def length(self) -> float:
        return float(self.xs[-1])

    @property
    def pair(self) -> RiemannPair:
        return RiemannPair(self.s_plus, self.s_minus)


def augmented_invariants(
    law: PressureLaw, state: FieldState, edge_id: str
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, FloatArray]:
    """(xs, S+, S-, rho, v) on ``[0, centres, l]``.

    Without stored traces the end values repeat the outermost cells.
    """
    eg = state.grid[edge_id]
    pair = to_riemann(law, state.rho[edge_id], state.v[edge_id])
    s_plus, s_minus = np.asarray(pair.S_plus), np.asarray(pair.S_minus)
    traces = state.traces.get(edge_id)
    if traces is None:
        traces = np.array([[s_plus[0], s_minus[0]], [s_plus[-1], s_minus[-1]]])
    end_rho, end_v = from_riemann(law, RiemannPair(traces[:, 0], traces[:, 1]))
    end_rho, end_v = np.asarray(end_rho), np.asarray(end_v)
    return (
        eg.points,
        np.concatenate(([traces[0, 0]], s_plus, [traces[1, 0]])),
        np.concatenate(([traces[0, 1]], s_minus, [traces[1, 1]])),
        np.concatenate(([end_rho[0]], state.rho[edge_id], [end_rho[1]])),
        np.concatenate(([end_v[0]], state.v[edge_id], [end_v[1]])),
    )


def edge_work(
    law: PressureLaw,
    state: FieldState,
    edge_id: str,
    gamma: float,
    measurement: Measurement | None = None,
    truth: EdgeWork | None = None,
) -> EdgeWork:
    """Wave speeds and sources of one edge; ``measurement`` marks the observer."""
    xs, s_plus, s_minus, rho, v = augmented_invariants(law, state, edge_id)
    lam_plus, lam_minus = (np.asarray(a) for a in eigenvalues(law, rho, v))
    pair = RiemannPair(s_plus, s_minus)
    sigma = np.asarray(friction_sigma(law, pair, gamma))
    rate = measurement.damping_rate if measurement is not None else 0.0
    q_plus = -sigma + rate * s_plus
    q_minus = sigma + rate * s_minus
    if measurement is not None and measurement.active:
        if truth is None:
            raise SolverError("observer sources need the true state", {"edge": edge_id})
        b_plus, b_minus = nudging_riemann(law, measurement, truth.pair, pair)
        q_plus = q_plus + b_plus
        q_minus = q_minus + b_minus
    return EdgeWork(xs, s_plus, s_minus, lam_plus, lam_minus, q_plus, q_minus, rate)


def _transport(
    work: EdgeWork,
    values: FloatArray,
    sources: FloatArray,
    speed: FloatArray,
    x_at: FloatArray,
    dt: float,
    left: BoundaryPair,
    right: BoundaryPair,
) -> FloatArray:
    """Variation-of-constants update of one family at the points ``x_at``."""
    rate = work.rate
    foot = x_at - speed * dt
    out = np.exp(-rate * dt) * np.interp(foot, work.xs, values)
    out = out + dt * np.exp(-0.5 * rate * dt) * np.interp(foot, work.xs, sources)

    for mask, x_b, index, boundary in (
        (foot < 0.0, 0.0, 0, left),
        (foot > work.length, work.length, -1, right),
    ):
        if not np.any(mask):
            continue
        if boundary is None:
            raise SolverError("supersonic trace", {"x": float(x_at[mask][0])})
        old, new = boundary
        tau = np.abs(x_at[mask] - x_b) / np.abs(speed[mask])
        weight = 1.0 - tau / dt
        s_b = (1.0 - weight) * old + weight * new
        out[mask] = np.exp(-rate * tau) * s_b + tau * np.exp(-0.5 * rate * tau) * sources[index]
    return out


def arriving_traces(works: dict[str, EdgeWork], dt: float) -> dict[EndKey, float]:
    """Invariants reaching every edge end at t + dt along the incoming family."""
    incoming: dict[EndKey, float] = {}
    for edge_id, w in works.items():
        if w.lam_minus[0] >= 0.0 or w.lam_plus[-1] <= 0.0:
            raise SolverError("supersonic trace", {"edge": edge_id})
        start = np.array([0.0])
        end = np.array([w.length])
        incoming[(edge_id, End.START)] = float(
            _transport(w, w.s_minus, w.q_minus, w.lam_minus[:1], start, dt, None, None)[0]
        )
        incoming[(edge_id, End.END)] = float(
            _transport(w, w.s_plus, w.q_plus, w.lam_plus[-1:], end, dt, None, None)[0]
        )
    return incoming


def advance_system(
    law: PressureLaw,
    state: FieldState,
    works: dict[str, EdgeWork],
    resolver: NodeResolver,
    dt: float,
) -> FieldState:
    """One characteristic step of a single system."""
    t_new = state.t + dt
    incoming = arriving_traces(works, dt)
    outgoing = resolver.resolve(incoming, t_new)

    rho: dict[str, FloatArray] = {}
    v: dict[str, FloatArray] = {}
    traces: dict[str, FloatArray] = {}
    for edge_id, w in works.items():
        start, end = (edge_id, End.START), (edge_id, End.END)
        centers = w.xs[1:-1]
        s_plus = _transport(
            w, w.s_plus, w.q_plus, w.lam_plus[1:-1], centers, dt,
            (float(w.s_plus[0]), outgoing[start]), None,
        )  # fmt: skip
        s_minus = _transport(
            w, w.s_minus, w.q_minus, w.lam_minus[1:-1], centers, dt,
            None, (float(w.s_minus[-1]), outgoing[end]),
        )  # fmt: skip
        r, u = from_riemann(law, RiemannPair(s_plus, s_minus))
        rho[edge_id], v[edge_id] = np.asarray(r), np.asarray(u)
        traces[edge_id] = np.array(
            [[outgoing[start], incoming[start]], [incoming[end], outgoing[end]]]
        )
    new_state = FieldState(t_new, state.grid, rho, v, traces)
    new_state.check_admissible()
    return new_state


def step_moc(twin: TwinState, dt: float) -> TwinState:
    """Advance truth and observer by one characteristic step.

    The observer is nudged with the truth at time t.

    Raises:
        SolverError: CFL violation, supersonic trace, failed node solve or
            inadmissible state; ``details`` carry time and step
    """
    scenario = twin.scenario
    law = scenario.law
    check_cfl(law, twin.truth, dt, scenario.cfl, twin.step)
    check_cfl(law, twin.observer, dt, scenario.cfl, twin.step)
    measurement = twin.measurement
    try:
        truth_works = {
            e: edge_work(law, twin.truth, e, scenario.gamma) for e in twin.truth.grid
        }
        obs_works = {
            e: edge_work(law, twin.observer, e, scenario.gamma, measurement, truth_works[e])
            for e in twin.observer.grid
        }
        truth = advance_system(law, twin.truth, truth_works, twin.resolvers.truth, dt)
        observer = advance_system(law, twin.observer, obs_works, twin.resolvers.observer, dt)
    except SolverError as e:
        e.details.update(twin.context())
        raise
    except (JunctionError, OutOfBandError, DomainError) as e:
        raise SolverError(f"characteristic step failed: {e}", twin.context(**e.details)) from e
    return twin.advanced(truth, observer, dt)
