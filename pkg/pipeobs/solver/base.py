"""
Twin state and step-size control shared by the steppers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..exceptions import SolverError
from ..models.config import SolverSettings
from ..models.pressure import PressureLaw
from ..models.scenario import Scenario
from ..models.state import FieldState
from ..numerics.observer import Measurement
from ..numerics.riemann import eigenvalues
from .nodes import NodeResolver


@dataclass
class TwinResolvers:
    """Node resolvers of the truth and the observer system."""

    truth: NodeResolver
    observer: NodeResolver

    @classmethod
    def for_scenario(cls, scenario: Scenario, settings: SolverSettings) -> TwinResolvers:
        def build() -> NodeResolver:
            return NodeResolver(scenario.topology, scenario.law, scenario.boundary, settings)

        return cls(build(), build())


@dataclass(frozen=True)
class TwinState:
    """Truth and observer at a common time level.

    Both systems share the grid and the boundary schedules; the resolvers carry
    Newton warm starts and are owned by whichever driver advances this state.
    """

    truth: FieldState
    observer: FieldState
    scenario: Scenario
    resolvers: TwinResolvers = field(compare=False, repr=False)
    step: int = 0
    dt: float = 0.0

    @classmethod
    def initial(cls, scenario: Scenario, settings: SolverSettings | None = None) -> TwinState:
        settings = settings or SolverSettings()
        return cls(
            scenario.initial_state(observer=False),
            scenario.initial_state(observer=True),
            scenario,
            TwinResolvers.for_scenario(scenario, settings),
        )

    @property
    def t(self) -> float:
        return self.truth.t

    @property
    def measurement(self) -> Measurement:
        return Measurement(self.scenario.mode, self.scenario.mu)

    def advanced(self, truth: FieldState, observer: FieldState, dt: float) -> TwinState:
        return replace(self, truth=truth, observer=observer, step=self.step + 1, dt=dt)

    def context(self, **extra: object) -> dict[str, object]:
        return {"time": self.t, "step": self.step, **extra}


def max_wave_speed(law: PressureLaw, state: FieldState, edge_id: str) -> float:
    lam_plus, lam_minus = eigenvalues(law, state.rho[edge_id], state.v[edge_id])
    return float(max(np.max(np.abs(lam_plus)), np.max(np.abs(lam_minus))))


def cfl_dt(
    law: PressureLaw, state: FieldState, cfl: float, dx: float | None = None, step: int = 0
) -> float:
    """``cfl * dx / max |lambda+-|`` over all cells; per-edge cell widths unless ``dx`` is given.

    Raises:
        SolverError: if the wave speeds vanish or are not finite
    """
    dt = np.inf
    for edge_id, eg in state.grid.edges.items():
        speed = max_wave_speed(law, state, edge_id)
        if not np.isfinite(speed) or speed <= 0.0:
            raise SolverError(
                "degenerate wave speed", {"time": state.t, "step": step, "edge": edge_id}
            )
        dt = min(dt, cfl * (dx if dx is not None else eg.dx) / speed)
    return float(dt)


def check_cfl(law: PressureLaw, state: FieldState, dt: float, cfl: float, step: int) -> None:
    """Raises ``SolverError`` if ``dt`` exceeds the CFL bound of ``state``."""
    limit = cfl_dt(law, state, cfl, step=step)
    if dt > limit * (1.0 + 1e-12):
        raise SolverError(
            "CFL violation", {"time": state.t, "step": step, "dt": dt, "limit": limit}
        )
