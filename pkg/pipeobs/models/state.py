"""
Grid layout and field states.

Every edge carries N cells of width ``length / N``; values live at the cell
centres. A field state may also carry the Riemann-invariant traces at the two
pipe ends, which the characteristic stepper keeps between steps.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DiagnosticsError, DomainError
from .network import NetworkTopology
from .types import ArrayLike, FloatArray


@dataclass(frozen=True)
class EdgeGrid:
    length: float
    cells: int

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def centers(self) -> FloatArray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def points(self) -> FloatArray:
        """Pipe ends plus cell centres, in increasing order."""
        return np.concatenate(([0.0], self.centers, [self.length]))


@dataclass(frozen=True)
class Grid:
    edges: Mapping[str, EdgeGrid]

    @classmethod
    def uniform(cls, topology: NetworkTopology, cells: int) -> Grid:
        return cls({e.id: EdgeGrid(e.length, cells) for e in topology.edges})

    @property
    def min_dx(self) -> float:
        return min(g.dx for g in self.edges.values())

    def __getitem__(self, edge_id: str) -> EdgeGrid:
        return self.edges[edge_id]

    def __iter__(self):  # type: ignore[no-untyped-def]
        return iter(self.edges)


def _frozen(values: ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FieldState:
    """Density and velocity per edge at one time level.

    ``traces[e]`` is a 2x2 array ``[[S+(0), S-(0)], [S+(l), S-(l)]]`` or absent.
    """

    t: float
    grid: Grid
    rho: Mapping[str, FloatArray]
    v: Mapping[str, FloatArray]
    traces: Mapping[str, FloatArray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", {k: _frozen(a) for k, a in self.rho.items()})
        object.__setattr__(self, "v", {k: _frozen(a) for k, a in self.v.items()})
        object.__setattr__(self, "traces", {k: _frozen(a) for k, a in self.traces.items()})
        for edge_id, eg in self.grid.edges.items():
            if self.rho[edge_id].shape != (eg.cells,) or self.v[edge_id].shape != (eg.cells,):
                raise DiagnosticsError("grid mismatch", {"edge": edge_id, "cells": eg.cells})

    def m(self, edge_id: str) -> FloatArray:
        return self.rho[edge_id] * self.v[edge_id]

    def check_admissible(self) -> None:
        for edge_id in self.grid:
            rho, v = self.rho[edge_id], self.v[edge_id]
            if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(v))):
                raise DomainError("non-finite state", {"edge": edge_id, "t": self.t})
            if not np.all(rho > 0.0):
                raise DomainError("density not positive", {"edge": edge_id, "t": self.t})

    def max_abs_v(self) -> float:
        return max(float(np.max(np.abs(a))) for a in self.v.values())

    def density_range(self) -> tuple[float, float]:
        return (
            min(float(np.min(a)) for a in self.rho.values()),
            max(float(np.max(a)) for a in self.rho.values()),
        )

    def same_grid(self, other: FieldState) -> bool:
        return self.grid == other.grid


def convert_conservative(rho: ArrayLike, v: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """(rho, v) -> (rho, m)."""
    r = np.asarray(rho, dtype=np.float64)
    if not np.all(r > 0.0):
        raise DomainError("density not positive")
    return r, r * np.asarray(v, dtype=np.float64)


def convert_primitive(rho: ArrayLike, m: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """(rho, m) -> (rho, v)."""
    r = np.asarray(rho, dtype=np.float64)
    if not np.all(r > 0.0):
        raise DomainError("density not positive")
    return r, np.asarray(m, dtype=np.float64) / r
