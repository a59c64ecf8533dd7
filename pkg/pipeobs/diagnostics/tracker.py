"""
Time antiderivatives behind the auxiliary Lyapunov functionals.

For each system the tracker accumulates, with the left-endpoint rule of the
stepper,

    M(x, t) = int_0^t m dt' - int_{x_a}^x rho_0          (dM/dx = -rho)
    N(x, t) = int_0^t h dt' + K(x, t),  dK/dx = -(v_0 - int_0^t gamma |v| v dt')

M is anchored per edge at the end whose node prescribes the mass flow
(x = 0 otherwise). N is anchored at the enthalpy node and continued along a
breadth-first walk of the network, so it is continuous at inner nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DiagnosticsError
from ..models.network import NetworkTopology
from ..models.pressure import PressureLaw
from ..models.scenario import Scenario
from ..models.state import FieldState, Grid
from ..models.types import BoundaryQuantity, FloatArray, RiemannPair
from ..numerics.riemann import enthalpy, from_riemann
from ..solver.nodes import End
from ..utils.unified_logger import get_logger

logger = get_logger(__name__)

TIME_TOL = 1e-9


def cumulative_midpoint(values: FloatArray, dx: float, from_end: bool = False) -> FloatArray:
    """``int`` of the cell function from one pipe end to every cell centre."""
    if from_end:
        return cumulative_midpoint(values[::-1], dx)[::-1]
    return (np.cumsum(values) - 0.5 * values) * dx


def end_values(law: PressureLaw, state: FieldState, edge_id: str) -> tuple[FloatArray, FloatArray]:
    """(m, h) at x = 0 and x = l; cell values when no traces are stored."""
    traces = state.traces.get(edge_id)
    if traces is None:
        rho = state.rho[edge_id][[0, -1]]
        v = state.v[edge_id][[0, -1]]
    else:
        r, u = from_riemann(law, RiemannPair(traces[:, 0], traces[:, 1]))
        rho, v = np.asarray(r), np.asarray(u)
    return rho * v, np.asarray(enthalpy(law, rho, v))


@dataclass
class SystemHistory:
    """Running time integrals of one system."""

    flow: dict[str, FloatArray]
    enthalpy: dict[str, FloatArray]
    friction: dict[str, FloatArray]
    end_flow: dict[str, FloatArray]
    end_enthalpy: dict[str, FloatArray]
    rho0: dict[str, FloatArray]
    v0: dict[str, FloatArray]

    @classmethod
    def start(cls, state: FieldState) -> SystemHistory:
        def zeros(n: int | None = None) -> dict[str, FloatArray]:
            return {e: np.zeros(n or state.grid[e].cells) for e in state.grid}

        return cls(
            flow=zeros(),
            enthalpy=zeros(),
            friction=zeros(),
            end_flow=zeros(2),
            end_enthalpy=zeros(2),
            rho0={e: state.rho[e].copy() for e in state.grid},
            v0={e: state.v[e].copy() for e in state.grid},
        )

    def accumulate(self, law: PressureLaw, state: FieldState, gamma: float, dt: float) -> None:
        for e in state.grid:
            rho, v = state.rho[e], state.v[e]
            self.flow[e] += dt * rho * v
            self.enthalpy[e] += dt * np.asarray(enthalpy(law, rho, v))
            self.friction[e] += dt * gamma * np.abs(v) * v
            m_end, h_end = end_values(law, state, e)
            self.end_flow[e] += dt * m_end
            self.end_enthalpy[e] += dt * h_end


@dataclass
class AntiderivativeTracker:
    """M and N of truth and observer, advanced by the step driver only."""

    law: PressureLaw
    topology: NetworkTopology
    grid: Grid
    gamma: float
    mass_anchor: dict[str, End]
    enthalpy_root: str | None
    truth: SystemHistory
    observer: SystemHistory
    t: float = 0.0
    _walk: list[tuple[str, str]] = field(default_factory=list, repr=False)

    @classmethod
    def start(
        cls,
        law: PressureLaw,
        topology: NetworkTopology,
        truth: FieldState,
        observer: FieldState,
        gamma: float = 0.0,
        mass_nodes: frozenset[str] = frozenset(),
        enthalpy_root: str | None = None,
    ) -> AntiderivativeTracker:
        """Tracker at the time of ``truth``.

        ``mass_nodes`` are the nodes with prescribed mass flow; ``enthalpy_root``
        anchors N and may only be omitted for F1-only use.
        """
        anchor = {
            edge.id: (
                End.END if edge.end in mass_nodes and edge.start not in mass_nodes else End.START
            )
            for edge in topology.edges
        }
        walk = []
        if enthalpy_root is not None:
            if not topology.is_tree:
                raise DiagnosticsError(
                    "enthalpy antiderivative needs a network without cycles",
                    {"nodes": len(topology.nodes), "edges": len(topology.edges)},
                )
            walk = [(entry, edge.id) for entry, edge in topology.walk_from(enthalpy_root)]
        return cls(
            law,
            topology,
            truth.grid,
            gamma,
            anchor,
            enthalpy_root,
            SystemHistory.start(truth),
            SystemHistory.start(observer),
            truth.t,
            walk,
        )

    @classmethod
    def for_scenario(
        cls, scenario: Scenario, truth: FieldState, observer: FieldState
    ) -> AntiderivativeTracker:
        mass_nodes = frozenset(
            node for node, bc in scenario.boundary.items()
            if bc.quantity is BoundaryQuantity.MASSFLOW
        )  # fmt: skip
        root = scenario.anchor_node
        if root is None and len(scenario.topology.edges) == 1:
            edge = scenario.topology.edges[0]
            root = edge.end if edge.end not in mass_nodes else edge.start
        return cls.start(
            scenario.law, scenario.topology, truth, observer, scenario.gamma, mass_nodes, root
        )

    def advance(self, truth: FieldState, observer: FieldState, dt: float) -> None:
        """Accumulate the states of the current time over the step ``dt``."""
        self._check_time(truth, observer)
        self.truth.accumulate(self.law, truth, self.gamma, dt)
        self.observer.accumulate(self.law, observer, self.gamma, dt)
        self.t += dt

    def _check_time(self, *states: FieldState) -> None:
        for state in states:
            if abs(state.t - self.t) > TIME_TOL * max(1.0, abs(self.t)):
                raise DiagnosticsError(
                    "time desynchronization", {"tracker_t": self.t, "state_t": state.t}
                )

    def M(self, history: SystemHistory) -> dict[str, FloatArray]:  # noqa: N802
        out = {}
        for e, eg in self.grid.edges.items():
            from_end = self.mass_anchor[e] is End.END
            initial = cumulative_midpoint(history.rho0[e], eg.dx, from_end)
            # int_{x_a}^x rho_0 changes sign when x_a = l
            out[e] = history.flow[e] + initial if from_end else history.flow[e] - initial
        return out

    def N(self, history: SystemHistory) -> dict[str, FloatArray]:  # noqa: N802
        if self.enthalpy_root is None:
            raise DiagnosticsError("missing anchor node for the enthalpy antiderivative")
        out: dict[str, FloatArray] = {}
        node_value = {self.enthalpy_root: 0.0}
        for entry, edge_id in self._walk:
            edge = self.topology.edge(edge_id)
            dx = self.grid[edge_id].dx
            w = history.v0[edge_id] - history.friction[edge_id]
            k_entry = node_value[entry]
            if entry == edge.start:
                k = k_entry - cumulative_midpoint(w, dx)
                node_value[edge.end] = k_entry - float(np.sum(w)) * dx
            else:
                k = k_entry + cumulative_midpoint(w, dx, from_end=True)
                node_value[edge.start] = k_entry + float(np.sum(w)) * dx
            out[edge_id] = history.enthalpy[edge_id] + k
        return out

    def mass_anchor_gap(self) -> dict[str, float]:
        """Truth minus observer of ``int m dt`` at each anchored edge end."""
        return {
            e: float(self.truth.end_flow[e][end] - self.observer.end_flow[e][end])
            for e, end in self.mass_anchor.items()
        }

    def enthalpy_anchor_gap(self) -> float:
        """Truth minus observer of N at the enthalpy anchor node."""
        if self.enthalpy_root is None:
            raise DiagnosticsError("missing anchor node for the enthalpy antiderivative")
        inc = self.topology.incident(self.enthalpy_root)[0]
        end = End.START if inc.at_start else End.END
        e = inc.edge.id
        return float(self.truth.end_enthalpy[e][end] - self.observer.end_enthalpy[e][end])

    def f1(self, obs: FieldState, truth: FieldState) -> float:
        """Integral of ``(M - M_hat)(v - v_hat)``."""
        self._check_time(obs, truth)
        m_truth, m_obs = self.M(self.truth), self.M(self.observer)
        return float(
            sum(
                np.sum((m_truth[e] - m_obs[e]) * (truth.v[e] - obs.v[e])) * eg.dx
                for e, eg in self.grid.edges.items()
            )
        )

    def f2(self, obs: FieldState, truth: FieldState) -> float:
        """Integral of ``(N - N_hat)(rho - rho_hat)``."""
        self._check_time(obs, truth)
        n_truth, n_obs = self.N(self.truth), self.N(self.observer)
        return float(
            sum(
                np.sum((n_truth[e] - n_obs[e]) * (truth.rho[e] - obs.rho[e])) * eg.dx
                for e, eg in self.grid.edges.items()
            )
        )


def f1(tracker: AntiderivativeTracker, obs: FieldState, truth: FieldState) -> float:
    return tracker.f1(obs, truth)


def f2(tracker: AntiderivativeTracker, obs: FieldState, truth: FieldState) -> float:
    return tracker.f2(obs, truth)
