"""
Network-level node resolution shared by both steppers.

Edge ends are addressed as ``(edge_id, End.START)`` (x = 0) and
``(edge_id, End.END)`` (x = l). The invariant arriving at a node is S- at a
start and S+ at an end; the leaving one is S+ at a start and S- at an end.
Node-local mass flow is ``-s * m`` with ``s`` the orientation sign.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..exceptions import JunctionError
from ..models.config import SolverSettings
from ..models.network import NetworkTopology
from ..models.pressure import PressureLaw
from ..models.scenario import BoundaryCondition
from ..models.types import BoundaryQuantity
from ..numerics.junction import NodeProblem, couple_node, invert_boundary_h, invert_boundary_m


class End(IntEnum):
    START = 0
    END = 1


EndKey = tuple[str, End]


@dataclass
class NodeResolver:
    """Resolves all nodes of one system; keeps warm starts between calls."""

    topology: NetworkTopology
    law: PressureLaw
    boundary: Mapping[str, BoundaryCondition]
    settings: SolverSettings = field(default_factory=SolverSettings)
    S_max: float | None = None  # noqa: N815
    _warm: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    max_mass_defect: float = 0.0

    def resolve(self, incoming: Mapping[EndKey, float], t: float) -> dict[EndKey, float]:
        """Outgoing invariants at every edge end for time ``t``.

        Raises:
            JunctionError: a node solve failed; ``details`` names the node
        """
        outgoing: dict[EndKey, float] = {}
        for node in self.topology.nodes:
            incidences = self.topology.incident(node.id)
            keys = [(inc.edge.id, End.START if inc.at_start else End.END) for inc in incidences]
            r_minus = np.array([incoming[k] for k in keys])
            try:
                if node.id in self.boundary:
                    r_plus = np.array([self._boundary(node.id, incidences[0].sign, r_minus[0], t)])
                else:
                    solution = couple_node(
                        NodeProblem(node.id, self.law, r_minus, self.S_max),
                        warm_start=self._warm.get(node.id),
                        tol=self.settings.newton_tol,
                        max_iter=self.settings.newton_max_iter,
                        strict=self.settings.strict,
                    )
                    r_plus = solution.R_plus
                    self.max_mass_defect = max(self.max_mass_defect, abs(solution.residual))
            except JunctionError as e:
                e.details.setdefault("node", node.id)
                e.details.setdefault("t", t)
                raise
            self._warm[node.id] = r_plus
            outgoing.update(zip(keys, (float(x) for x in r_plus), strict=True))
        return outgoing

    def _boundary(self, node_id: str, sign: int, r_minus: float, t: float) -> float:
        bc = self.boundary[node_id]
        value = bc.schedule(t)
        warm = self._warm.get(node_id)
        warm_start = float(warm[0]) if warm is not None else None
        invert = (
            invert_boundary_m if bc.quantity is BoundaryQuantity.MASSFLOW else invert_boundary_h
        )
        if bc.quantity is BoundaryQuantity.MASSFLOW:
            value = -sign * value
        return invert(
            self.law,
            value,
            r_minus,
            warm_start=warm_start,
            tol=self.settings.newton_tol,
            max_iter=self.settings.newton_max_iter,
            strict=self.settings.strict,
            S_max=self.S_max,
        )


def end_pairs(
    incoming: Mapping[EndKey, float], outgoing: Mapping[EndKey, float]
) -> dict[EndKey, tuple[float, float]]:
    """Physical (S+, S-) at each edge end."""
    pairs: dict[EndKey, tuple[float, float]] = {}
    for key, arriving in incoming.items():
        leaving = outgoing[key]
        pairs[key] = (leaving, arriving) if key[1] is End.START else (arriving, leaving)
    return pairs
