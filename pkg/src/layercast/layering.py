"""Layering data model, exhaustive validators, and the central BFS oracle.

A layering gives every node an integer layer with a unique layer-0 source,
and every other node a strictly lower-layered neighbor as parent.  A coloring
is collision-free when nodes within two hops that sit on different layers
never share a color.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .graph import RadioGraph, bfs_distances


class LayeringInputError(ValueError):
    """Raised when a layering does not even cover the graph's nodes."""


@dataclass(frozen=True)
class Layering:
    source: int
    layer: dict[int, int]
    parent: dict[int, int]
    color: dict[int, int] | None = None
    color_count: int | None = None

    @property
    def depth(self) -> int:
        return max(self.layer.values())

    def is_colored(self) -> bool:
        return self.color is not None and self.color_count is not None


class Violation(NamedTuple):
    kind: str
    nodes: tuple[int, ...]


@dataclass
class LayeringReport:
    valid: bool
    depth: int
    stretch: int
    collision_free: bool | None
    violations: list[Violation] = field(default_factory=list)


def validate(graph: RadioGraph, lay: Layering) -> LayeringReport:
    """Check every layering invariant exhaustively and measure depth/stretch.

    Distance-2 pairs are enumerated through two-hop neighborhoods, so the
    collision-freeness verdict is exact, not sampled.
    """
    nodes = set(graph.nodes)
    missing = sorted(nodes - set(lay.layer))
    if missing or not 0 <= lay.source < graph.node_count:
        raise LayeringInputError(f"layer assignment missing for nodes: {missing}")

    violations: list[Violation] = []
    zero_nodes = sorted(v for v in nodes if lay.layer[v] == 0)
    if zero_nodes != [lay.source]:
        violations.append(Violation("source-layer", tuple(zero_nodes)))
    for v in sorted(nodes):
        if lay.layer[v] < 0:
            violations.append(Violation("negative-layer", (v,)))
    if lay.source in lay.parent:
        violations.append(Violation("source-has-parent", (lay.source,)))
    for v in sorted(nodes - {lay.source}):
        p = lay.parent.get(v)
        if p is None:
            violations.append(Violation("missing-parent", (v,)))
            continue
        if p not in nodes:
            violations.append(Violation("unknown-parent", (v, p)))
            continue
        if p not in graph.neighbors(v):
            violations.append(Violation("parent-not-neighbor", (v, p)))
        if lay.layer[p] >= lay.layer[v]:
            violations.append(Violation("parent-not-lower", (v, p)))

    depth = max(lay.layer.values())
    stretch = 0
    for u in graph.nodes:
        for w in graph.neighbors(u):
            if u < w:
                stretch = max(stretch, abs(lay.layer[u] - lay.layer[w]))

    collision_free: bool | None = None
    if lay.is_colored():
        collision_free = True
        color = lay.color or {}
        count = lay.color_count or 0
        for v in sorted(nodes):
            c = color.get(v)
            if c is None:
                violations.append(Violation("missing-color", (v,)))
                collision_free = False
            elif not 0 <= c < count:
                violations.append(Violation("color-out-of-range", (v,)))
                collision_free = False
        if collision_free:
            for u in sorted(nodes):
                near = set(graph.neighbors(u))
                for w in graph.neighbors(u):
                    near.update(graph.neighbors(w))
                near.discard(u)
                for w in near:
                    if w > u and lay.layer[u] != lay.layer[w] and color[u] == color[w]:
                        violations.append(Violation("color-collision", (u, w)))
                        collision_free = False
    return LayeringReport(not violations, depth, stretch, collision_free, violations)


def bfs_layering(graph: RadioGraph, source: int) -> Layering:
    """Reference layering: layer = hop distance, parent = BFS predecessor.

    Computed centrally; this is the oracle the radio constructions are
    measured against.
    """
    dist = bfs_distances(graph.adj, source)
    layer = {v: dist[v] for v in graph.nodes}
    parent = {}
    for v in graph.nodes:
        if v == source:
            continue
        parent[v] = min(w for w in graph.neighbors(v) if dist[w] == dist[v] - 1)
    return Layering(source, layer, parent)


def mod_coloring(lay: Layering, colors: int) -> Layering:
    """Color a layering with c(v) = layer(v) mod colors.

    With colors = 2*stretch + 1 this is always collision-free: within two
    hops, different layers differ by at most 2*stretch.
    """
    if colors < 1:
        raise ValueError("colors must be >= 1")
    return Layering(
        lay.source,
        dict(lay.layer),
        dict(lay.parent),
        {v: lv % colors for v, lv in lay.layer.items()},
        colors,
    )


def format_layering(lay: Layering) -> str:
    n = len(lay.layer)
    colored = lay.is_colored()
    lines = [f"layering {n} {lay.color_count if colored else 0}"]
    for v in sorted(lay.layer):
        parent = lay.parent.get(v, -1)
        color = lay.color[v] if colored else -1
        lines.append(f"{v} {lay.layer[v]} {parent} {color}")
    return "\n".join(lines) + "\n"


def parse_layering(text: str) -> Layering:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = rows[0].split()
    if len(head) != 3 or head[0] != "layering":
        raise LayeringInputError(f"bad layering header: {rows[0]!r}")
    n, color_count = int(head[1]), int(head[2])
    if len(rows) - 1 != n:
        raise LayeringInputError(f"expected {n} node lines, found {len(rows) - 1}")
    layer: dict[int, int] = {}
    parent: dict[int, int] = {}
    color: dict[int, int] = {}
    source = None
    for ln in rows[1:]:
        v, lv, p, c = (int(x) for x in ln.split())
        layer[v] = lv
        if p >= 0:
            parent[v] = p
        else:
            source = v
        if c >= 0:
            color[v] = c
    if source is None:
        raise LayeringInputError("no source row (parent -1) found")
    if color_count > 0:
        return Layering(source, layer, parent, color, color_count)
    return Layering(source, layer, parent)


def read_layering(path: str | Path) -> Layering:
    return parse_layering(Path(path).read_text())


def write_layering(lay: Layering, path: str | Path) -> None:
    Path(path).write_text(format_layering(lay))
