"""
Tests for network topology, grid layout and field states.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from pipeobs.exceptions import DiagnosticsError, DomainError, ValidationError
from pipeobs.models.network import Edge, NetworkTopology, Node
from pipeobs.models.state import (
    EdgeGrid,
    FieldState,
    Grid,
    convert_conservative,
    convert_primitive,
)
from pipeobs.models.types import NodeKind


pytestmark = pytest.mark.unit


def _line(*lengths: float) -> NetworkTopology:
    """Pipes in series: n0 -> n1 -> ... with inner nodes between them."""
    count = len(lengths)
    nodes = [
        Node(f"n{k}", NodeKind.BOUNDARY if k in (0, count) else NodeKind.INNER)
        for k in range(count + 1)
    ]
    edges = [Edge(f"p{k}", f"n{k}", f"n{k + 1}", length) for k, length in enumerate(lengths)]
    return NetworkTopology(tuple(nodes), tuple(edges))


class TestTopology:
    """Construction checks and queries."""

    def test_single_pipe(self, single_pipe: NetworkTopology) -> None:
        assert [n.id for n in single_pipe.boundary_nodes] == ["left", "right"]
        assert single_pipe.inner_nodes == []
        assert not single_pipe.is_star
        assert single_pipe.is_tree

    def test_star_classification(self, star3: NetworkTopology) -> None:
        assert star3.is_star
        assert [n.id for n in star3.inner_nodes] == ["center"]
        assert len(star3.incident("center")) == 3
        assert all(inc.at_start for inc in star3.incident("center"))

    def test_orientation(self, single_pipe: NetworkTopology) -> None:
        assert single_pipe.orientation("pipe", "left") == -1
        assert single_pipe.orientation("pipe", "right") == 1
        with pytest.raises(ValidationError, match="not incident"):
            _line(1.0, 1.0).orientation("p0", "n2")

    def test_series_is_not_star(self) -> None:
        line = _line(1.0, 1.0, 1.0)
        assert not line.is_star
        assert line.total_length == pytest.approx(3.0)
        assert line.max_length == pytest.approx(1.0)

    def test_walk_visits_every_edge_once(self) -> None:
        line = _line(1.0, 2.0, 0.5)
        walk = list(line.walk_from("n3"))
        assert [edge.id for _, edge in walk] == ["p2", "p1", "p0"]
        assert [entry for entry, _ in walk] == ["n3", "n2", "n1"]

    @pytest.mark.parametrize(
        ("nodes", "edges", "message"),
        [
            (
                (Node("a", NodeKind.BOUNDARY), Node("b", NodeKind.BOUNDARY)),
                (Edge("e", "a", "b", -1.0),),
                "edge length not positive",
            ),
            (
                (Node("a", NodeKind.BOUNDARY), Node("b", NodeKind.BOUNDARY)),
                (Edge("e", "a", "c", 1.0),),
                "not a declared node",
            ),
            (
                (
                    Node("a", NodeKind.BOUNDARY),
                    Node("b", NodeKind.BOUNDARY),
                    Node("c", NodeKind.BOUNDARY),
                    Node("d", NodeKind.BOUNDARY),
                ),
                (Edge("e", "a", "b", 1.0), Edge("f", "c", "d", 1.0)),
                "not connected",
            ),
            (
                (Node("a", NodeKind.INNER), Node("b", NodeKind.BOUNDARY)),
                (Edge("e", "a", "b", 1.0),),
                "inner node must have at least two",
            ),
            (
                (Node("a", NodeKind.BOUNDARY), Node("a", NodeKind.BOUNDARY)),
                (Edge("e", "a", "a", 1.0),),
                "duplicate node id",
            ),
        ],
    )
    def test_invalid_graphs(
        self, nodes: tuple[Node, ...], edges: tuple[Edge, ...], message: str
    ) -> None:
        with pytest.raises(ValidationError, match=message):
            NetworkTopology(nodes, edges)


class TestGridAndState:
    """Uniform grids and the state container."""

    def test_edge_grid(self) -> None:
        eg = EdgeGrid(2.0, 4)
        assert eg.dx == pytest.approx(0.5)
        np.testing.assert_allclose(eg.centers, [0.25, 0.75, 1.25, 1.75])
        np.testing.assert_allclose(eg.points, [0.0, 0.25, 0.75, 1.25, 1.75, 2.0])

    def test_uniform_grid(self, star3: NetworkTopology) -> None:
        grid = Grid.uniform(star3, 10)
        assert sorted(grid) == ["e1", "e2", "e3"]
        assert grid.min_dx == pytest.approx(0.1)

    def test_state_is_read_only(
        self, single_pipe: NetworkTopology, make_state: Callable[..., FieldState]
    ) -> None:
        state = make_state(single_pipe, 5)
        with pytest.raises(ValueError):
            state.rho["pipe"][0] = 2.0

    def test_shape_mismatch(self, single_pipe: NetworkTopology) -> None:
        grid = Grid.uniform(single_pipe, 4)
        with pytest.raises(DiagnosticsError, match="grid mismatch"):
            FieldState(0.0, grid, {"pipe": np.ones(3)}, {"pipe": np.zeros(4)})

    def test_admissibility(
        self, single_pipe: NetworkTopology, make_state: Callable[..., FieldState]
    ) -> None:
        make_state(single_pipe, 4).check_admissible()
        with pytest.raises(DomainError, match="density not positive"):
            make_state(single_pipe, 4, rho=-1.0).check_admissible()
        with pytest.raises(DomainError, match="non-finite"):
            make_state(single_pipe, 4, v=np.nan).check_admissible()

    def test_ranges(
        self, single_pipe: NetworkTopology, make_state: Callable[..., FieldState]
    ) -> None:
        state = make_state(single_pipe, 10, rho=lambda x: 1.0 + x, v=lambda x: -x)
        lo, hi = state.density_range()
        assert lo == pytest.approx(1.05) and hi == pytest.approx(1.95)
        assert state.max_abs_v() == pytest.approx(0.95)
        x = state.grid["pipe"].centers
        np.testing.assert_allclose(state.m("pipe"), -(1.0 + x) * x)


class TestConservativeConversion:
    """(rho, v) <-> (rho, m)."""

    @pytest.mark.parametrize(("rho", "v", "m"), [(1.0, 0.0, 0.0), (2.0, 0.5, 1.0)])
    def test_known_pairs(self, rho: float, v: float, m: float) -> None:
        assert convert_conservative(rho, v)[1] == pytest.approx(m)
        assert convert_primitive(rho, m)[1] == pytest.approx(v)

    def test_random_round_trip(self, rng: np.random.Generator) -> None:
        rho = rng.uniform(0.5, 2.0, size=1000)
        v = rng.uniform(-0.5, 0.5, size=1000)
        _, back = convert_primitive(*convert_conservative(rho, v))
        np.testing.assert_allclose(back, v, rtol=0.0, atol=1e-14)

    def test_domain_error(self) -> None:
        with pytest.raises(DomainError):
            convert_conservative(np.array([1.0, 0.0]), np.zeros(2))
        with pytest.raises(DomainError):
            convert_primitive(np.array([-1.0]), np.zeros(1))
