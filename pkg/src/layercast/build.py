"""Layering constructions executed over the radio simulator.

basic_layering floods from the source and layers nodes by first-reception
phase.  refine_lra chops a d-stretch layering into strips via boundary and
start-line marking, then re-layers each strip with a synchronized wave,
yielding a 5-collision-free layering.  refine_recursive repeats the chop at
geometrically shrinking widths, trading extra colors for speed.
build_pseudo_bfs composes them into the end-to-end construction.

Announcement payloads are tagged tuples:
  ("w", label, layer, color)   wave transmission carrying an assigned layer
  ("f", label)                 flood transmission (first-reception timing only)
  ("m", label, work, layer)    marking transmission: working layer + assigned layer
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

from .bc import BcParams, bc_value
from .crbc import CrConfig, cr_broadcast, cr_phase_count
from .graph import RadioGraph
from .layering import Layering, validate
from .rng import clog2, coin_pow2, id_bits, mix, node_label
from .sim import Packet, RoundTrace, transmit_step


class ConstructionError(RuntimeError):
    """A radio construction left nodes unlayered or unparented."""

    def __init__(self, stage: str, starved: list[int]):
        super().__init__(f"{stage}: {len(starved)} node(s) not reached: {starved[:8]}")
        self.stage = stage
        self.starved = starved


def _trivial_layering(source: int, colors: int | None) -> Layering:
    if colors is None:
        return Layering(source, {source: 0}, {})
    return Layering(source, {source: 0}, {}, {source: 0}, colors)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


# ---------------------------------------------------------------------------
# basic layering


def basic_layering_traced(
    graph: RadioGraph,
    source: int,
    delta: int,
    seed: int,
    c1: int = 8,
    c2: int = 8,
) -> tuple[Layering, RoundTrace]:
    n = graph.node_count
    if n == 1:
        return _trivial_layering(source, None), RoundTrace("basic-layering", seed)
    params = BcParams.from_n_d(n, graph.diameter)
    low, high = params.log_nd, params.log_n * params.log_n
    delta_eff = min(max(delta, low), high)
    if delta_eff != delta:
        warnings.warn(f"delta={delta} outside [{low}, {high}], clamped to {delta_eff}", stacklevel=2)
    phases = cr_phase_count(graph.diameter, n, delta_eff, c1, c2)
    config = CrConfig(
        frozenset({source}),
        frozenset(graph.nodes) - {source},
        delta_eff,
        phases,
        params,
    )
    result, trace = cr_broadcast(graph, config, {source: ("root", source)}, seed, "basic-layering")
    starved = sorted(v for v in graph.nodes if v != source and v not in result.first_reception)
    if starved:
        raise ConstructionError("basic-layering", starved)
    layer = {source: 0}
    parent = {}
    for v in graph.nodes:
        if v != source:
            hit = result.first_reception[v]
            layer[v] = hit.phase
            parent[v] = hit.sender
    return Layering(source, layer, parent), trace


def basic_layering(graph: RadioGraph, source: int, delta: int, seed: int, c1: int = 8, c2: int = 8) -> Layering:
    """Flood from source; layer every node by its first-reception phase."""
    return basic_layering_traced(graph, source, delta, seed, c1, c2)[0]


# ---------------------------------------------------------------------------
# shared radio sub-protocols


def _marking_run(
    graph: RadioGraph,
    announcers: dict[int, tuple],
    rounds: int,
    seed: int,
    tag: str,
    on_packet: Callable[[int, int, tuple, int], None],
) -> RoundTrace:
    """A fixed announcer set transmits for a stretch of rounds.

    Exponents cycle 0..log_n-1, so over Theta(log^2 n) rounds every listener
    next to an announcer hears one alone with overwhelming probability.
    """
    n = graph.node_count
    log_n = max(1, clog2(max(n, 2)))
    trace = RoundTrace(tag, seed)
    order = sorted(announcers)
    packets = {v: Packet(announcers[v], id_bits(n)) for v in order}
    for t in range(rounds):
        exponent = t % log_n
        txs = {}
        for v in order:
            if coin_pow2(seed, v, t, exponent):
                txs[v] = packets[v]
        outcome = transmit_step(graph, txs)
        for w in sorted(outcome.receptions):
            rec = outcome.receptions[w]
            on_packet(w, rec.sender, rec.packet.payload, t)
        trace.record(t, txs, outcome)
    trace.round_count = rounds
    return trace


def _wave_run(
    graph: RadioGraph,
    sources: dict[int, tuple],
    receptive: set[int],
    delta: int,
    phases: int,
    bc: BcParams,
    seed: int,
    tag: str,
    join: Callable[[int, int, tuple, int], tuple | None],
    passive: Callable[[int, int, tuple, int], None] | None = None,
    stop_early: Callable[[], bool] | None = None,
) -> RoundTrace:
    """Wave variant of the flooding schedule: joiners announce their own value.

    A receptive node's first reception fixes its announcement via join(); it
    starts transmitting at the next phase, so the frontier advances at most
    one hop per phase.  Receptions at nodes in neither set feed passive().
    """
    n = graph.node_count
    trace = RoundTrace(tag, seed)
    active: dict[int, Packet] = {v: Packet(p, id_bits(n)) for v, p in sources.items()}
    waiting = set(receptive) - set(sources)
    pending: dict[int, tuple] = {}
    order = sorted(active)
    for phase in range(1, phases + 1):
        for j in range(1, delta + 1):
            rnd = (phase - 1) * delta + (j - 1)
            exponent = bc_value(phase * delta + j, bc)
            txs = {}
            for v in order:
                if coin_pow2(seed, v, rnd, exponent):
                    txs[v] = active[v]
            outcome = transmit_step(graph, txs)
            for w in sorted(outcome.receptions):
                rec = outcome.receptions[w]
                if w in waiting:
                    payload = join(w, rec.sender, rec.packet.payload, phase)
                    if payload is not None:
                        pending[w] = payload
                        waiting.discard(w)
                elif w not in active and passive is not None:
                    passive(w, rec.sender, rec.packet.payload, rnd)
            trace.record(rnd, txs, outcome)
        if pending:
            for v, payload in pending.items():
                active[v] = Packet(payload, id_bits(n))
            pending = {}
            order = sorted(active)
        if not waiting and (stop_early is None or stop_early()):
            trace.round_count = phase * delta
            return trace
    trace.round_count = phases * delta
    return trace


# ---------------------------------------------------------------------------
# layer refinement (strip chopping)


def _band_index(layer_value: int, width: int) -> int:
    return _ceil_div(layer_value, width)


class _Refiner:
    """State shared by one refinement run: layers, colors, parents."""

    def __init__(self, graph: RadioGraph, source: int, seed: int):
        self.graph = graph
        self.source = source
        self.n = graph.node_count
        self.log_n = max(1, clog2(self.n))
        self.labels = {v: node_label(seed, v, self.n) for v in graph.nodes}
        self.layer: dict[int, int] = {source: 0}
        self.color: dict[int, int] = {}
        self.parent: dict[int, int] = {}
        self.boundaries: set[int] = set()
        self.traces: list[RoundTrace] = []

    def passive_parent(self, w: int, sender: int, payload: tuple, rnd: int) -> None:
        """Adopt the first lower-layered announcer heard while sidelined."""
        if w == self.source or w in self.parent or w not in self.layer:
            return
        kind = payload[0]
        announced = payload[2] if kind == "w" else payload[3] if kind == "m" else None
        if announced is not None and announced < self.layer[w]:
            self.parent[w] = sender

    def unparented(self, members: set[int]) -> list[int]:
        return sorted(v for v in members if v != self.source and v not in self.parent)


def refine_lra_traced(
    graph: RadioGraph,
    lay: Layering,
    d: int,
    seed: int,
    alpha_lra: int = 4,
) -> tuple[Layering, list[RoundTrace]]:
    n = graph.node_count
    if d < 1:
        raise ValueError("d must be >= 1")
    if n == 1:
        return _trivial_layering(lay.source, 5), []
    report = validate(graph, lay)
    if not report.valid:
        raise ValueError("input layering is invalid")
    if report.stretch > d:
        raise ValueError(f"input stretch {report.stretch} exceeds d={d}")

    st = _Refiner(graph, lay.source, seed)
    stage_rounds = alpha_lra * st.log_n * st.log_n
    work = lay.layer

    # Stage 1: bands at ceil(l/d) = 1 mod 5 announce their layers.  A quieter
    # node hearing a higher-layered band member sits just below a band and
    # becomes a boundary node; the band cuts the graph, so boundaries split
    # it into strips of at most 5d layers.
    band = {v for v in graph.nodes if _band_index(work[v], d) % 5 == 1}
    boundary: set[int] = set()

    def on_band(w: int, sender: int, payload: tuple, t: int) -> None:
        if w not in band and payload[2] > work[w]:
            boundary.add(w)

    st.traces.append(
        _marking_run(
            graph,
            {v: ("m", st.labels[v], work[v], 0) for v in sorted(band)},
            stage_rounds,
            mix(seed, 1),
            "lra-stage1",
            on_band,
        )
    )
    for v in boundary:
        st.layer[v] = 2 * d * (_band_index(work[v], d) + 1)
        st.color[v] = 0

    # Stage 2: boundaries announce (l, l'); a non-boundary node hearing a
    # lower-layered boundary becomes a start-line node one layer above it.
    start_line: set[int] = set()

    def on_boundary(w: int, sender: int, payload: tuple, t: int) -> None:
        if w in boundary or w in start_line:
            return
        if payload[2] < work[w]:
            start_line.add(w)
            st.layer[w] = payload[3] + 1
            st.color[w] = 1
            st.parent[w] = sender

    st.traces.append(
        _marking_run(
            graph,
            {v: ("m", st.labels[v], work[v], st.layer[v]) for v in sorted(boundary)},
            stage_rounds,
            mix(seed, 2),
            "lra-stage2",
            on_boundary,
        )
    )
    if not start_line:
        raise ConstructionError("lra-stage2", sorted(set(graph.nodes) - boundary))

    # Stage 3: a wave from the start-lines sweeps each strip upward.  Colors
    # cycle 2 -> 3 -> 4, so same-colored different-layered strip nodes are
    # three hops apart.  Boundary nodes only listen and take the first
    # lower-layered wave sender as parent.
    interior = set(graph.nodes) - boundary - start_line

    def join(v: int, sender: int, payload: tuple, phase: int) -> tuple:
        st.layer[v] = payload[2] + 1
        st.color[v] = 2 + (payload[3] - 1) % 3
        st.parent[v] = sender
        return ("w", st.labels[v], st.layer[v], st.color[v])

    st.traces.append(
        _wave_run(
            graph,
            {v: ("w", st.labels[v], st.layer[v], st.color[v]) for v in sorted(start_line)},
            interior,
            stage_rounds,
            5 * d,
            BcParams.from_n_d(n, graph.diameter),
            mix(seed, 3),
            "lra-stage3",
            join,
            st.passive_parent,
            stop_early=lambda: not st.unparented(boundary),
        )
    )

    starved = sorted(v for v in graph.nodes if v not in st.layer)
    starved += st.unparented(boundary)
    if starved:
        raise ConstructionError("lra-stage3", starved)

    # The source heard its band from below, so it is the unique minimum at
    # layer 2d; shift everything down so it sits at 0 with no parent.
    shift = st.layer[lay.source]
    rest_min = min((st.layer[v] for v in graph.nodes if v != lay.source), default=shift + 1)
    if lay.source not in boundary or rest_min <= shift:
        raise ConstructionError("lra-normalize", [lay.source])
    st.parent.pop(lay.source, None)
    refined = Layering(
        lay.source,
        {v: st.layer[v] - shift for v in graph.nodes},
        st.parent,
        st.color,
        5,
    )
    return refined, st.traces


def refine_lra(graph: RadioGraph, lay: Layering, d: int, seed: int, alpha_lra: int = 4) -> Layering:
    """Refine a valid d-stretch layering into a 5-collision-free one."""
    return refine_lra_traced(graph, lay, d, seed, alpha_lra)[0]


# ---------------------------------------------------------------------------
# recursive refinement


def refine_recursive_traced(
    graph: RadioGraph,
    lay: Layering,
    r: int,
    seed: int,
    alpha: int = 8,
    c_delta: int = 4,
    alpha_lra: int = 4,
) -> tuple[Layering, list[RoundTrace]]:
    if r < 1:
        raise ValueError("r must be >= 1")
    n = graph.node_count
    colors = 2 * r + 1
    if n == 1:
        return _trivial_layering(lay.source, colors), []
    if not validate(graph, lay).valid:
        raise ValueError("input layering is invalid")

    source = lay.source
    st = _Refiner(graph, source, seed)
    st.color[source] = 0 if r == 1 else 2 * r
    log_n = st.log_n
    tau = max(2, math.ceil(alpha * log_n ** (1 / r)))
    bcp = BcParams.from_n_d(n, graph.diameter)
    stage_rounds = alpha_lra * log_n * log_n

    def level_delta(level: int) -> int:
        return max(1, math.ceil(c_delta * log_n ** (2 - (level - 1) / r)))

    def run_level(level: int, starts: set[int], base: int, region: set[int], seed_key: int) -> None:
        """Layer `region` relative to `base`, the shared layer of `starts`."""
        if not region:
            return
        if level == 1:
            # Base case: one wave; layer = first-reception phase, color =
            # phase mod 3.  The frontier moves at most one hop per phase, so
            # within two hops different layers differ by 1 or 2: never 0 mod 3.
            def join1(v: int, sender: int, payload: tuple, phase: int) -> tuple:
                st.layer[v] = base + phase
                st.color[v] = phase % 3
                st.parent[v] = sender
                return ("w", st.labels[v], st.layer[v], st.color[v])

            st.traces.append(
                _wave_run(
                    graph,
                    {v: ("w", st.labels[v], st.layer[v], st.color.get(v, 0)) for v in sorted(starts)},
                    region,
                    level_delta(1),
                    tau,
                    bcp,
                    mix(seed_key, 11),
                    "rlra-l1",
                    join1,
                    st.passive_parent,
                    stop_early=lambda: not st.unparented(st.boundaries),
                )
            )
            starved = sorted(v for v in region if v not in st.layer)
            if starved:
                raise ConstructionError("rlra-l1", starved)
            return

        width = tau ** (level - 1)
        # Working layers for this level's chop: a plain flood, layered by
        # first-reception phase.
        work: dict[int, int] = {v: 0 for v in starts}

        def join_flood(v: int, sender: int, payload: tuple, phase: int) -> tuple:
            work[v] = phase
            return ("f", st.labels[v])

        st.traces.append(
            _wave_run(
                graph,
                {v: ("f", st.labels[v]) for v in sorted(starts)},
                region,
                level_delta(level),
                tau ** level,
                bcp,
                mix(seed_key, 13),
                f"rlra-l{level}-flood",
                join_flood,
            )
        )
        starved = sorted(v for v in region if v not in work)
        if starved:
            raise ConstructionError(f"rlra-l{level}-flood", starved)

        band = {v for v in region if _band_index(work[v], width) % 5 == 1}
        boundary: set[int] = set()

        def on_band(w: int, sender: int, payload: tuple, t: int) -> None:
            if w in region and w not in band and payload[2] > work[w]:
                boundary.add(w)

        st.traces.append(
            _marking_run(
                graph,
                {v: ("m", st.labels[v], work[v], 0) for v in sorted(band)},
                stage_rounds,
                mix(seed_key, 17),
                f"rlra-l{level}-bands",
                on_band,
            )
        )
        st.boundaries |= boundary
        for v in boundary:
            st.layer[v] = base + 2 * width * _band_index(work[v], width)
            st.color[v] = 2 * level

        start_line: set[int] = set()
        feeds: dict[int, int] = {}

        def on_start(w: int, sender: int, payload: tuple, t: int) -> None:
            if w not in region or w in boundary or w in start_line:
                st.passive_parent(w, sender, payload, t)
                return
            if payload[2] < work[w]:
                start_line.add(w)
                feeds[w] = payload[4]
                st.layer[w] = payload[3] + 1
                st.color[w] = 2 * level - 1
                st.parent[w] = sender

        announcers = {
            v: ("m", st.labels[v], work[v], st.layer[v], _band_index(work[v], width) // 5)
            for v in sorted(boundary)
        }
        for v in sorted(starts):
            announcers[v] = ("m", st.labels[v], 0, st.layer[v], 0)
        st.traces.append(
            _marking_run(
                graph,
                announcers,
                stage_rounds,
                mix(seed_key, 19),
                f"rlra-l{level}-starts",
                on_start,
            )
        )
        rest = region - boundary - start_line
        if rest and not start_line:
            raise ConstructionError(f"rlra-l{level}-starts", sorted(rest))

        # Strips are band-separated, so running them one after another gives
        # the same result as the shared-round schedule.
        strips: dict[int, set[int]] = {}
        for v in rest:
            strips.setdefault((work[v] - 1) // width // 5, set()).add(v)
        strip_starts: dict[int, set[int]] = {}
        for v in start_line:
            strip_starts.setdefault(feeds[v], set()).add(v)
        for idx in sorted(strips):
            members = strips[idx]
            starts_here = strip_starts.get(idx, set())
            if not starts_here:
                raise ConstructionError(f"rlra-l{level}-strip{idx}", sorted(members))
            bases = {st.layer[s] for s in starts_here}
            if len(bases) != 1:
                raise ConstructionError(f"rlra-l{level}-strip{idx}", sorted(starts_here))
            run_level(level - 1, starts_here, bases.pop(), members, mix(seed_key, 23, idx))

    run_level(r, {source}, 0, set(graph.nodes) - {source}, mix(seed, 29))

    starved = sorted(
        set(v for v in graph.nodes if v not in st.layer) | set(st.unparented(set(graph.nodes)))
    )
    if starved:
        raise ConstructionError("rlra", starved)
    return Layering(source, st.layer, st.parent, st.color, colors), st.traces


def refine_recursive(
    graph: RadioGraph,
    lay: Layering,
    r: int,
    seed: int,
    alpha: int = 8,
    c_delta: int = 4,
) -> Layering:
    """Recursive strip refinement using 2r+1 colors, run from lay's source."""
    return refine_recursive_traced(graph, lay, r, seed, alpha, c_delta)[0]


# ---------------------------------------------------------------------------
# end-to-end pseudo-BFS construction


def build_pseudo_bfs_traced(
    graph: RadioGraph,
    source: int,
    eps: float,
    seed: int,
    c1: int = 8,
    c2: int = 8,
    alpha_lra: int = 4,
) -> tuple[Layering, list[RoundTrace]]:
    if eps <= 0:
        raise ValueError("eps must be > 0")
    n = graph.node_count
    if n == 1:
        return _trivial_layering(source, 5), []
    d_graph = graph.diameter
    small_diameter = d_graph < n**0.1
    if small_diameter:
        delta = max(1, clog2(n))
    else:
        delta = BcParams.from_n_d(n, d_graph).log_nd
    base, base_trace = basic_layering_traced(graph, source, delta, mix(seed, 101), c1, c2)
    traces = [base_trace]
    if small_diameter:
        refined, more = refine_recursive_traced(
            graph, base, max(1, math.ceil(1 / eps)), mix(seed, 103), alpha_lra=alpha_lra
        )
    else:
        stretch = max(1, validate(graph, base).stretch)
        refined, more = refine_lra_traced(graph, base, stretch, mix(seed, 103), alpha_lra)
    traces.extend(more)
    return refined, traces


def build_pseudo_bfs(
    graph: RadioGraph,
    source: int,
    eps: float,
    seed: int,
    c1: int = 8,
    c2: int = 8,
) -> Layering:
    """Construct an O(1)-collision-free layering of depth O(D + log n)."""
    return build_pseudo_bfs_traced(graph, source, eps, seed, c1, c2)[0]
