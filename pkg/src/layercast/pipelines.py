"""End-to-end compositions and graph generators.

Both pipelines follow the same three stages around a designated leader:
build a collision-free layering, gather every message at the leader, then
broadcast the batch back out with network coding.  Leader election is out of
scope; the leader is always a supplied parameter.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping

from .build import ConstructionError, build_pseudo_bfs_traced
from .coding import NcConfig, nc_broadcast
from .gathering import GatherConfig, GatherError, gather
from .graph import RadioGraph
from .layering import validate
from .rng import mix, node_label
from .sim import RoundTrace


class GenerationError(ValueError):
    pass


@dataclass
class PipelineResult:
    stages: dict[str, int]  # stage name -> rounds consumed
    success: bool
    failure: str | None = None
    node_messages: dict[int, frozenset] | None = None
    traces: list[RoundTrace] = field(default_factory=list)

    @property
    def total_rounds(self) -> int:
        return sum(self.stages.values())

    def stage_bounds(self) -> dict[str, tuple[int, int]]:
        """Half-open global round interval occupied by each stage."""
        bounds = {}
        base = 0
        for name, rounds in self.stages.items():
            bounds[name] = (base, base + rounds)
            base += rounds
        return bounds

    def combined_trace(self) -> RoundTrace:
        """Stage traces stitched into one, with disjoint round ranges."""
        combined = RoundTrace("pipeline", 0)
        base = 0
        for trace in self.traces:
            shifted = trace.shifted(base)
            combined.rounds.extend(shifted.rounds)
            base += trace.round_count
        combined.round_count = base
        return combined


def _run_pipeline(
    graph: RadioGraph,
    leader: int,
    placement: dict[int, list[int]],
    k: int,
    seed: int,
    eps: float,
    c_g: int,
    c_nc: int,
) -> PipelineResult:
    if leader not in set(graph.nodes):
        raise ValueError(f"leader {leader} not in graph")
    stages: dict[str, int] = {}
    traces: list[RoundTrace] = []
    if graph.node_count == 1:
        only = frozenset(m for msgs in placement.values() for m in msgs)
        return PipelineResult({"layering": 0, "gather": 0, "broadcast": 0}, True, None, {leader: only})

    try:
        layering, lay_traces = build_pseudo_bfs_traced(graph, leader, eps, mix(seed, 1))
    except ConstructionError as exc:
        return PipelineResult({"layering": 0}, False, f"layering: {exc}")
    traces.extend(lay_traces)
    stages["layering"] = sum(t.round_count for t in lay_traces)
    report = validate(graph, layering)
    if not report.valid:
        return PipelineResult(stages, False, f"layering: validator found {report.violations[:3]}", traces=traces)

    config = GatherConfig(layering, k, c_g=c_g)
    try:
        gathered, gather_trace = gather(graph, config, placement, mix(seed, 2))
    except GatherError as exc:
        stages["gather"] = 0
        return PipelineResult(stages, False, f"gather: {exc}", traces=traces)
    traces.append(gather_trace)
    stages["gather"] = gather_trace.round_count

    batch = [m for m, _ in sorted(gathered.delivered.items(), key=lambda kv: (kv[1][0], kv[0]))]
    nc_config = NcConfig(layering, k, c_nc=c_nc)
    nc_result, nc_trace = nc_broadcast(graph, nc_config, batch, mix(seed, 3))
    traces.append(nc_trace)
    stages["broadcast"] = nc_trace.round_count

    expected = frozenset(batch)
    node_messages = {
        v: frozenset(msgs) if msgs is not None else frozenset()
        for v, msgs in nc_result.decoded.items()
    }
    complete = nc_result.all_decoded() and all(node_messages[v] == expected for v in graph.nodes)
    failure = None if complete else "broadcast: not every node decoded the full batch"
    return PipelineResult(stages, complete, failure, node_messages, traces)


def gossip(
    graph: RadioGraph,
    leader: int,
    seed: int,
    eps: float = 0.5,
    c_g: int = 4,
    c_nc: int = 8,
) -> PipelineResult:
    """All-to-all broadcast: every node contributes one message."""
    n = graph.node_count
    placement = {v: [node_label(seed, v, n)] for v in graph.nodes}
    return _run_pipeline(graph, leader, placement, n, seed, eps, c_g, c_nc)


def multi_source_broadcast(
    graph: RadioGraph,
    sources: Mapping[int, list[int]],
    leader: int,
    seed: int,
    eps: float = 0.5,
    c_g: int = 4,
    c_nc: int = 8,
) -> PipelineResult:
    """Broadcast k messages that start at arbitrary source nodes."""
    tokens = [m for msgs in sources.values() for m in msgs]
    if not tokens:
        raise ValueError("need at least one message")
    if len(set(tokens)) != len(tokens):
        raise ValueError("message tokens must be distinct")
    return _run_pipeline(
        graph, leader, {v: list(m) for v, m in sources.items()}, len(tokens), seed, eps, c_g, c_nc
    )


# ---------------------------------------------------------------------------
# graph generators


def _gen_path(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def _gen_cycle(n: int) -> list[tuple[int, int]]:
    if n < 3:
        raise GenerationError("cycle needs n >= 3")
    return [(i, (i + 1) % n) for i in range(n)]


def _gen_grid(rows: int, cols: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return edges


def _gen_star(n: int) -> list[tuple[int, int]]:
    if n < 2:
        raise GenerationError("star needs n >= 2")
    return [(0, i) for i in range(1, n)]


def _gen_ring_of_cliques(cliques: int, clique_size: int) -> list[tuple[int, int]]:
    if cliques < 3 or clique_size < 2:
        raise GenerationError("ring_of_cliques needs cliques >= 3 and clique_size >= 2")
    edges = []
    for q in range(cliques):
        base = q * clique_size
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                edges.append((base + i, base + j))
        nxt = ((q + 1) % cliques) * clique_size
        edges.append((base + clique_size - 1, nxt))
    return edges


def generate_graph(family: str, params: Mapping[str, int | float], seed: int) -> RadioGraph:
    """Deterministic generator: equal (family, params, seed) gives equal graphs."""
    p = dict(params)
    family_key = int.from_bytes(family.encode()[:8].ljust(8, b"\0"), "big")
    rng = random.Random(mix(seed, family_key))
    if family == "path":
        n = int(p["n"])
        return RadioGraph.from_edges(n, _gen_path(n))
    if family == "cycle":
        n = int(p["n"])
        return RadioGraph.from_edges(n, _gen_cycle(n))
    if family == "grid":
        rows, cols = int(p["rows"]), int(p["cols"])
        return RadioGraph.from_edges(rows * cols, _gen_grid(rows, cols))
    if family == "star":
        n = int(p["n"])
        return RadioGraph.from_edges(n, _gen_star(n))
    if family == "complete":
        n = int(p["n"])
        return RadioGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if family == "tree":
        n = int(p["n"])
        if n < 1:
            raise GenerationError("tree needs n >= 1")
        return RadioGraph.from_edges(n, [(v, rng.randrange(v)) for v in range(1, n)])
    if family == "ring_of_cliques":
        cliques, size = int(p["cliques"]), int(p["clique_size"])
        return RadioGraph.from_edges(cliques * size, _gen_ring_of_cliques(cliques, size))
    if family == "gnp":
        n = int(p["n"])
        prob = float(p["p"])
        if not 0 < prob <= 1:
            raise GenerationError(f"gnp probability {prob} out of (0, 1]")
        for _ in range(200):
            edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < prob]
            try:
                return RadioGraph.from_edges(n, edges)
            except Exception:
                continue
        raise GenerationError(f"gnp({n}, {prob}) stayed disconnected after 200 draws")
    raise GenerationError(f"unknown family {family!r}")


def gnp_threshold_probability(n: int) -> float:
    """Connectivity-comfortable edge probability 3 ln(n) / n."""
    return 3.0 * math.log(n) / n
