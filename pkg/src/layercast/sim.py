"""Synchronous round engine: transmit/listen semantics, traces, machine runner.

One round: every node either transmits a packet or listens.  A listener
receives iff exactly one of its neighbors transmitted; two or more
transmitting neighbors collide, which is indistinguishable from silence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, NamedTuple

from .graph import RadioGraph
from .rng import clog2, node_rng


class SimulationError(RuntimeError):
    pass


class MachineFault(SimulationError):
    """A protocol machine raised internally; node and round identify it."""

    def __init__(self, node: int, round_index: int, cause: BaseException):
        super().__init__(f"machine at node {node} faulted in round {round_index}: {cause!r}")
        self.node = node
        self.round_index = round_index


class HeaderBudgetError(SimulationError):
    """A non-exempt packet exceeded the configured header budget."""


@dataclass(frozen=True)
class Packet:
    """A transmitted packet: opaque payload plus header-size accounting."""

    payload: Any
    header_bits: int = 0
    exempt: bool = False


@dataclass(frozen=True)
class Reception:
    sender: int
    packet: Packet


@dataclass(frozen=True)
class NodeAction:
    """Transmit(packet) when packet is set, otherwise listen."""

    packet: Packet | None = None

    @property
    def transmits(self) -> bool:
        return self.packet is not None


LISTEN = NodeAction()


def transmit(payload: Any, header_bits: int = 0, exempt: bool = False) -> NodeAction:
    return NodeAction(Packet(payload, header_bits, exempt))


@dataclass(frozen=True)
class RoundOutcome:
    """Receptions and collision events of one round."""

    receptions: dict[int, Reception]
    collisions: frozenset[int]


class TraceRound(NamedTuple):
    index: int
    transmitters: tuple[tuple[int, Packet], ...]
    receptions: tuple[tuple[int, int], ...]  # (listener, sender)
    collisions: tuple[int, ...]


@dataclass
class RoundTrace:
    """Per-round record of a protocol run.

    Rounds with no transmitter are not recorded; round_count still counts
    every simulated round, so sparse protocols stay replayable.
    """

    protocol: str
    seed: int
    rounds: list[TraceRound] = field(default_factory=list)
    round_count: int = 0

    def record(self, index: int, txs: Mapping[int, Packet], outcome: RoundOutcome) -> None:
        if not txs:
            return
        self.rounds.append(
            TraceRound(
                index,
                tuple(sorted(txs.items())),
                tuple(sorted((v, r.sender) for v, r in outcome.receptions.items())),
                tuple(sorted(outcome.collisions)),
            )
        )

    def shifted(self, base: int) -> "RoundTrace":
        """Copy with all round indices offset by base (for stage stitching)."""
        rounds = [TraceRound(r.index + base, r.transmitters, r.receptions, r.collisions) for r in self.rounds]
        return RoundTrace(self.protocol, self.seed, rounds, self.round_count)

    def to_jsonl(self) -> str:
        lines = []
        for r in self.rounds:
            obj = {
                "round": r.index,
                "transmitters": [[v, p.header_bits] for v, p in r.transmitters],
                "receptions": [[v, s] for v, s in r.receptions],
                "collisions": list(r.collisions),
            }
            lines.append(json.dumps(obj, separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())


def header_budget(n: int, h: int = 4) -> int:
    """Header budget in bits for an n-node network: h * ceil(log2 n)."""
    return h * max(1, clog2(max(n, 2)))


def check_header(packet: Packet, budget_bits: int) -> None:
    if not packet.exempt and packet.header_bits > budget_bits:
        raise HeaderBudgetError(
            f"header of {packet.header_bits} bits exceeds budget of {budget_bits} bits"
        )


def transmit_step(graph: RadioGraph, txs: Mapping[int, Packet]) -> RoundOutcome:
    """One radio round given only the transmitter set; everyone else listens."""
    adj = graph.adj
    tally: dict[int, int | None] = {}
    for v in txs:
        for w in adj[v]:
            if w not in txs:
                tally[w] = v if w not in tally else None
    receptions = {w: Reception(s, txs[s]) for w, s in tally.items() if s is not None}
    collisions = frozenset(w for w, s in tally.items() if s is None)
    return RoundOutcome(receptions, collisions)


def step(graph: RadioGraph, actions: Mapping[int, NodeAction]) -> RoundOutcome:
    """One radio round from a full action map (exactly one action per node)."""
    if len(actions) != graph.node_count or set(actions) != set(graph.nodes):
        unknown = sorted(set(actions) - set(graph.nodes))
        if unknown:
            raise ValueError(f"unknown node ids in actions: {unknown}")
        missing = sorted(set(graph.nodes) - set(actions))
        raise ValueError(f"missing actions for nodes: {missing}")
    txs = {v: a.packet for v, a in actions.items() if a.packet is not None}
    return transmit_step(graph, txs)


def replay_check(graph: RadioGraph, trace: RoundTrace) -> None:
    """Re-derive every recorded round from its transmitter set and compare.

    Raises SimulationError on the first mismatch; a clean return certifies
    that the trace satisfies the reception and collision rules.
    """
    for r in trace.rounds:
        out = transmit_step(graph, dict(r.transmitters))
        got_rec = tuple(sorted((v, rec.sender) for v, rec in out.receptions.items()))
        got_col = tuple(sorted(out.collisions))
        if got_rec != r.receptions or got_col != r.collisions:
            raise SimulationError(f"trace mismatch at round {r.index}")
        senders = {v for v, _ in r.transmitters}
        for v, _ in r.receptions:
            if v in senders:
                raise SimulationError(f"transmitter {v} recorded a reception in round {r.index}")


class Machine:
    """Per-node protocol state machine driven by run_protocol.

    Subclasses override act()/observe(); both receive the same per-round
    stream, so a machine's draws depend only on (seed, node, round).
    """

    finished: bool = False

    def act(self, round_index: int, rng) -> Packet | None:
        return None

    def observe(self, round_index: int, reception: Reception | None, rng) -> None:
        pass


def run_protocol(
    graph: RadioGraph,
    machines: Mapping[int, Machine],
    max_rounds: int,
    seed: int,
    protocol: str = "machines",
    header_budget_bits: int | None = None,
) -> RoundTrace:
    """Run machines for up to max_rounds rounds or until all report finished."""
    if max_rounds <= 0:
        raise ValueError("max_rounds must be > 0")
    if set(machines) != set(graph.nodes):
        raise ValueError("machines must cover every node exactly once")
    trace = RoundTrace(protocol, seed)
    order = sorted(machines)
    for rnd in range(max_rounds):
        if all(machines[v].finished for v in order):
            break
        txs: dict[int, Packet] = {}
        rngs = {}
        for v in order:
            rng = node_rng(seed, v, rnd)
            rngs[v] = rng
            try:
                packet = machines[v].act(rnd, rng)
            except Exception as exc:
                raise MachineFault(v, rnd, exc) from exc
            if packet is not None:
                if header_budget_bits is not None:
                    check_header(packet, header_budget_bits)
                txs[v] = packet
        outcome = transmit_step(graph, txs)
        for v in order:
            try:
                machines[v].observe(rnd, outcome.receptions.get(v), rngs[v])
            except Exception as exc:
                raise MachineFault(v, rnd, exc) from exc
        trace.record(rnd, txs, outcome)
        trace.round_count = rnd + 1
    return trace
