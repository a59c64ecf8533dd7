"""
Network topology of a pipe system.

Pipes are directed edges ``start -> end``; the orientation sign of an edge at
a node is -1 at its start and +1 at its end. Connectivity and path queries
are delegated to networkx.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import networkx as nx

from ..exceptions import ValidationError
from .types import NodeKind


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind


@dataclass(frozen=True)
class Edge:
    id: str
    start: str
    end: str
    length: float


@dataclass(frozen=True)
class Incidence:
    """One (edge, node) pair seen from the node."""

    edge: Edge
    sign: int

    @property
    def at_start(self) -> bool:
        return self.sign == -1


@dataclass(frozen=True)
class NetworkTopology:
    """Connected directed graph of pipes."""

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _graph: nx.MultiGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        node_ids = [n.id for n in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ValidationError("duplicate node id", {"nodes": node_ids})
        edge_ids = [e.id for e in self.edges]
        if len(set(edge_ids)) != len(edge_ids):
            raise ValidationError("duplicate edge id", {"edges": edge_ids})
        if not self.edges:
            raise ValidationError("network has no edges")

        graph: nx.MultiGraph = nx.MultiGraph()
        graph.add_nodes_from(node_ids)
        known = set(node_ids)
        for edge in self.edges:
            if edge.length <= 0.0:
                raise ValidationError(
                    "edge length not positive", {"edge": edge.id, "length": edge.length}
                )
            if edge.start not in known or edge.end not in known:
                raise ValidationError(
                    "edge endpoint is not a declared node",
                    {"edge": edge.id, "start": edge.start, "end": edge.end},
                )
            if edge.start == edge.end:
                raise ValidationError("self-loop edge", {"edge": edge.id})
            graph.add_edge(edge.start, edge.end, key=edge.id)

        if not nx.is_connected(graph):
            raise ValidationError("graph not connected", {"nodes": node_ids})

        for node in self.nodes:
            degree = graph.degree(node.id)
            if node.kind is NodeKind.BOUNDARY and degree != 1:
                raise ValidationError(
                    "boundary node must have exactly one incident edge",
                    {"node": node.id, "degree": degree},
                )
            if node.kind is NodeKind.INNER and degree < 2:
                raise ValidationError(
                    "inner node must have at least two incident edges",
                    {"node": node.id, "degree": degree},
                )
        object.__setattr__(self, "_graph", graph)

    @classmethod
    def single_pipe(cls, length: float = 1.0, edge_id: str = "pipe") -> NetworkTopology:
        return cls(
            nodes=(Node("left", NodeKind.BOUNDARY), Node("right", NodeKind.BOUNDARY)),
            edges=(Edge(edge_id, "left", "right", length),),
        )

    @classmethod
    def star(cls, lengths: Sequence[float], center: str = "center") -> NetworkTopology:
        """Star with every pipe starting at the center node."""
        nodes = [Node(center, NodeKind.INNER)]
        edges = []
        for k, length in enumerate(lengths, start=1):
            nodes.append(Node(f"b{k}", NodeKind.BOUNDARY))
            edges.append(Edge(f"e{k}", center, f"b{k}", float(length)))
        return cls(nodes=tuple(nodes), edges=tuple(edges))

    def node(self, node_id: str) -> Node:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def edge(self, edge_id: str) -> Edge:
        for edge in self.edges:
            if edge.id == edge_id:
                return edge
        raise KeyError(edge_id)

    def orientation(self, edge_id: str, node_id: str) -> int:
        """s^e(nu): -1 at the start node, +1 at the end node."""
        edge = self.edge(edge_id)
        if node_id == edge.start:
            return -1
        if node_id == edge.end:
            return 1
        raise ValidationError("edge not incident to node", {"edge": edge_id, "node": node_id})

    def incident(self, node_id: str) -> list[Incidence]:
        out = []
        for edge in self.edges:
            if edge.start == node_id:
                out.append(Incidence(edge, -1))
            elif edge.end == node_id:
                out.append(Incidence(edge, 1))
        return out

    @property
    def boundary_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.BOUNDARY]

    @property
    def inner_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.INNER]

    @property
    def is_star(self) -> bool:
        inner = self.inner_nodes
        if len(inner) != 1:
            return False
        center = inner[0].id
        return all(center in (e.start, e.end) for e in self.edges)

    @property
    def is_tree(self) -> bool:
        return int(self._graph.number_of_edges()) == len(self.nodes) - 1

    @property
    def max_length(self) -> float:
        return max(e.length for e in self.edges)

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.edges)

    def walk_from(self, root: str) -> Iterator[tuple[str, Edge]]:
        """Yield ``(entry_node, edge)`` in breadth-first order from ``root``.

        On graphs with cycles every edge is still visited once; edges closing
        a cycle are entered from whichever endpoint is reached first.
        """
        seen: set[str] = set()
        for parent, _child, key in nx.edge_bfs(self._graph, root):
            if key in seen:
                continue
            seen.add(key)
            yield parent, self.edge(key)
