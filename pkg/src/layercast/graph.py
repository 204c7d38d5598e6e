"""Undirected connected radio topologies with exact diameters."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


class GraphError(ValueError):
    """Raised for malformed or disconnected graph input."""


@dataclass(frozen=True)
class RadioGraph:
    """Connected undirected graph; adjacency stored as sorted tuples."""

    node_count: int
    adj: tuple[tuple[int, ...], ...]
    diameter: int

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> "RadioGraph":
        if node_count < 1:
            raise GraphError("node_count must be >= 1")
        neighbor_sets: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphError(f"edge ({u}, {v}) out of range for n={node_count}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            neighbor_sets[u].add(v)
            neighbor_sets[v].add(u)
        adj = tuple(tuple(sorted(s)) for s in neighbor_sets)
        ecc = _eccentricities(adj)
        return cls(node_count, adj, max(ecc) if ecc else 0)

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self.nodes for v in self.adj[u] if u < v]


def bfs_distances(adj: tuple[tuple[int, ...], ...], source: int) -> list[int]:
    """Hop distances from source; -1 for unreachable nodes."""
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _eccentricities(adj: tuple[tuple[int, ...], ...]) -> list[int]:
    eccs = []
    for s in range(len(adj)):
        dist = bfs_distances(adj, s)
        if min(dist) < 0:
            raise GraphError("graph is not connected")
        eccs.append(max(dist))
    return eccs


def diameter(graph: RadioGraph) -> int:
    """Exact diameter by all-pairs BFS (recomputed, not the cached value)."""
    return max(_eccentricities(graph.adj))


def parse_graph(text: str) -> RadioGraph:
    """Parse the text format: header "n m", then m lines "u v".

    Blank lines and lines starting with '#' are ignored.
    """
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise GraphError("empty graph file")
    head = rows[0].split()
    if len(head) != 2:
        raise GraphError(f"bad header {rows[0]!r}, expected 'n m'")
    n, m = int(head[0]), int(head[1])
    if len(rows) - 1 != m:
        raise GraphError(f"header claims {m} edges, file has {len(rows) - 1}")
    edges = []
    for ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return RadioGraph.from_edges(n, edges)


def format_graph(graph: RadioGraph) -> str:
    lines = [f"{graph.node_count} {graph.edge_count()}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges())
    return "\n".join(lines) + "\n"


def read_graph(path: str | Path) -> RadioGraph:
    return parse_graph(Path(path).read_text())


def write_graph(graph: RadioGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))
