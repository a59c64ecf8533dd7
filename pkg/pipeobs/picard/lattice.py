"""
Space-time lattices of Riemann invariants.

Each edge stores ``S+`` and ``S-`` on a tensor grid of ``nt + 1`` times by
``nx + 1`` points including both pipe ends. Off-lattice values are bilinear.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..models.types import FloatArray


@dataclass(frozen=True)
class EdgeLattice:
    times: FloatArray
    xs: FloatArray
    s_plus: FloatArray
    s_minus: FloatArray

    @property
    def length(self) -> float:
        return float(self.xs[-1])

    @property
    def dx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def interpolators(self) -> tuple[RegularGridInterpolator, RegularGridInterpolator]:
        grid = (self.times, self.xs)
        return (
            RegularGridInterpolator(grid, self.s_plus, bounds_error=False, fill_value=None),
            RegularGridInterpolator(grid, self.s_minus, bounds_error=False, fill_value=None),
        )

    def row(self, k: int) -> tuple[FloatArray, FloatArray]:
        return self.s_plus[k], self.s_minus[k]


@dataclass(frozen=True)
class SpaceTimeField:
    """Riemann invariants of every edge on a common time axis."""

    times: FloatArray
    edges: Mapping[str, EdgeLattice] = field(default_factory=dict)

    @classmethod
    def frozen(
        cls, times: FloatArray, rows: Mapping[str, tuple[FloatArray, FloatArray, FloatArray]]
    ) -> SpaceTimeField:
        """Field constant in time; ``rows[e] = (xs, S+, S-)``."""
        n = times.size
        return cls(
            times,
            {
                e: EdgeLattice(times, xs, np.tile(sp, (n, 1)), np.tile(sm, (n, 1)))
                for e, (xs, sp, sm) in rows.items()
            },
        )

    def __getitem__(self, edge_id: str) -> EdgeLattice:
        return self.edges[edge_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self.edges)

    @property
    def T(self) -> float:  # noqa: N802
        return float(self.times[-1] - self.times[0])

    def terminal_rows(self) -> dict[str, tuple[FloatArray, FloatArray, FloatArray]]:
        return {e: (lat.xs, lat.s_plus[-1], lat.s_minus[-1]) for e, lat in self.edges.items()}

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(lat.s_plus)) and np.all(np.isfinite(lat.s_minus))
            for lat in self.edges.values()
        )


def norm_M(field_a: SpaceTimeField, field_b: SpaceTimeField | None = None) -> float:  # noqa: N802
    """``max |S+| + |S-|`` over the lattice, of ``a - b`` if ``b`` is given."""
    worst = 0.0
    for e, lat in field_a.edges.items():
        sp, sm = lat.s_plus, lat.s_minus
        if field_b is not None:
            sp = sp - field_b[e].s_plus
            sm = sm - field_b[e].s_minus
        worst = max(worst, float(np.max(np.abs(sp) + np.abs(sm))))
    return worst


def measure_lipschitz(space_time: SpaceTimeField) -> tuple[float, float]:
    """(largest ``|dS| / dx`` between neighbouring lattice points, ``sup |S+-|``)."""
    slope, sup = 0.0, 0.0
    for lat in space_time.edges.values():
        for values in (lat.s_plus, lat.s_minus):
            if values.shape[1] > 1:
                slope = max(slope, float(np.max(np.abs(np.diff(values, axis=1)))) / lat.dx)
            sup = max(sup, float(np.max(np.abs(values))))
    return slope, sup
