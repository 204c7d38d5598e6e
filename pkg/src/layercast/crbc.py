"""Phase-structured randomized flooding: the workhorse broadcast primitive.

The run is split into T phases of delta rounds.  Active nodes transmit their
current message with probability 2**-b, where b follows the exponent
schedule; receptive nodes that hear something join the active set at the end
of that phase and forward the message from then on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple

from .bc import BcParams, bc_value
from .graph import RadioGraph
from .rng import clog2, coin_pow2, id_bits, node_label
from .sim import Packet, RoundTrace, check_header, header_budget, transmit_step


@dataclass(frozen=True)
class CrConfig:
    active: frozenset[int]
    receptive: frozenset[int]
    delta: int
    phases: int
    bc: BcParams

    def __post_init__(self) -> None:
        if not self.active:
            raise ValueError("active set must be non-empty")
        if self.active & self.receptive:
            raise ValueError("active and receptive sets must be disjoint")
        if self.delta < 1 or self.phases < 1:
            raise ValueError("delta and phases must be >= 1")


class FirstReception(NamedTuple):
    phase: int  # 1-based phase index
    round_index: int  # 0-based global round
    sender: int


@dataclass
class CrResult:
    messages: dict[int, Any]
    first_reception: dict[int, FirstReception] = field(default_factory=dict)
    joined_at: dict[int, int] = field(default_factory=dict)

    def delivered_to(self) -> set[int]:
        return set(self.first_reception)


def cr_phase_count(graph_d: int, n: int, delta: int, c1: int = 8, c2: int = 8) -> int:
    """Phase budget T = ceil((c1*D*(log(n/D) + delta) + c2*log^2 n) / delta)."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    log_ratio = max(0, clog2(max(n, 2)) - max(1, clog2(max(graph_d, 1))))
    log_n = max(1, clog2(max(n, 2)))
    total = c1 * graph_d * (log_ratio + delta) + c2 * log_n * log_n
    return -(-total // delta)


def cr_broadcast(
    graph: RadioGraph,
    config: CrConfig,
    messages: Mapping[int, Any],
    seed: int,
    protocol: str = "crbc",
    header_h: int = 4,
) -> tuple[CrResult, RoundTrace]:
    """Run the full T*delta-round schedule and report per-node outcomes.

    Nodes outside both sets listen passively: they record receptions and
    adopt messages but never join the active set.
    """
    missing = sorted(v for v in config.active if v not in messages)
    if missing:
        raise ValueError(f"active nodes without a payload: {missing}")
    n = graph.node_count
    budget = header_budget(n, header_h)
    labels = {v: node_label(seed, v, n) for v in graph.nodes}
    result = CrResult(messages=dict(messages))
    trace = RoundTrace(protocol, seed)
    active = sorted(config.active)
    active_set = set(active)
    packets: dict[int, tuple[Any, Packet]] = {}

    def packet_for(v: int) -> Packet:
        msg = result.messages.get(v)
        cached = packets.get(v)
        if cached is None or cached[0] is not msg:
            pkt = Packet((labels[v], msg), id_bits(n))
            check_header(pkt, budget)
            packets[v] = (msg, pkt)
        return packets[v][1]

    for phase in range(1, config.phases + 1):
        for j in range(1, config.delta + 1):
            rnd = (phase - 1) * config.delta + (j - 1)
            exponent = bc_value(phase * config.delta + j, config.bc)
            txs: dict[int, Packet] = {}
            for v in active:
                if coin_pow2(seed, v, rnd, exponent):
                    txs[v] = packet_for(v)
            outcome = transmit_step(graph, txs)
            for v in sorted(outcome.receptions):
                rec = outcome.receptions[v]
                _, payload = rec.packet.payload
                result.messages[v] = payload
                if v not in result.first_reception:
                    result.first_reception[v] = FirstReception(phase, rnd, rec.sender)
            trace.record(rnd, txs, outcome)
        joiners = [
            v
            for v in sorted(config.receptive)
            if v not in active_set and v in result.messages
        ]
        for v in joiners:
            active_set.add(v)
            result.joined_at[v] = phase
        if joiners:
            active = sorted(active_set)
    trace.round_count = config.phases * config.delta
    return result, trace
