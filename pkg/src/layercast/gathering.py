"""Wave-pipelined convergecast of k messages to the layering source.

Time is split into epochs of C two-round color cycles (a data slot and an
acknowledgment slot).  A packet at a node of layer l is due in epoch
D' - l + delay: each wave sweeps from the deepest layer toward the source,
one layer per epoch.  Random delays spread packets of one wave apart;
unacknowledged packets move to the next wave with a strictly larger delay
drawn past every earlier window, so waves never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, NamedTuple

from .graph import RadioGraph
from .layering import Layering, validate
from .rng import clog2, id_bits, node_rng
from .sim import Packet, RoundTrace, check_header, header_budget, transmit_step


class GatherError(RuntimeError):
    pass


class WaveCapExceeded(GatherError):
    def __init__(self, message: Hashable, cap: int):
        super().__init__(f"message {message!r} exceeded wave cap {cap}")
        self.message = message


class GatherIncomplete(GatherError):
    def __init__(self, delivered: dict, pending: dict):
        undelivered = sorted(str(m) for msgs in pending.values() for m in msgs)
        super().__init__(f"epochs exhausted with {len(undelivered)} undelivered: {undelivered[:8]}")
        self.delivered = delivered
        self.pending = pending


class GatherPacket(NamedTuple):
    message: Hashable
    destination: int
    wave: int
    delay: int


@dataclass(frozen=True)
class GatherConfig:
    layering: Layering
    k: int
    c_g: int = 4
    wave_cap: int | None = None

    def cap_for(self, n: int) -> int:
        return self.wave_cap if self.wave_cap is not None else 4 * max(1, clog2(max(n, 2)))


@dataclass
class GatherResult:
    delivered: dict[Hashable, tuple[int, int]]  # message -> (arrival epoch, waves used)
    epochs_run: int
    wave_log: list[tuple[Hashable, int, int]] = field(default_factory=list)  # (message, wave, delay)


def gather_epoch_bound(d_prime: int, k: int, n: int, c_g: int) -> int:
    """Epoch budget c_g * (D' + 16k + 4*log2(n)**2)."""
    log_n = max(1, clog2(max(n, 2)))
    return c_g * (d_prime + 16 * k + 4 * log_n * log_n)


def delay_window(k: int, wave: int, n: int) -> int:
    """Width of the wave's delay window: 8 * max(k / 2^wave, 4 log n)."""
    halved = -(-max(k, 1) // (1 << wave))
    return 8 * max(halved, 4 * max(1, clog2(max(n, 2))))


def max_previous_delay(k: int, wave: int, n: int) -> int:
    """Sum of all delay windows up to and including the given wave."""
    return sum(delay_window(k, w, n) for w in range(wave + 1))


def gather(
    graph: RadioGraph,
    config: GatherConfig,
    placement: Mapping[int, list[Hashable]],
    seed: int,
) -> tuple[GatherResult, RoundTrace]:
    """Gather every placed message at the layering source.

    Raises WaveCapExceeded if a message is re-waved past the cap and
    GatherIncomplete if the epoch budget runs out with packets pending.
    The simulation skips epochs in which no packet is due; those epochs
    carry no transmissions.
    """
    lay = config.layering
    if not lay.is_colored():
        raise ValueError("gathering needs a colored layering")
    report = validate(graph, lay)
    if not report.valid or not report.collision_free:
        raise ValueError("layering must validate as collision-free")
    tokens = [m for msgs in placement.values() for m in msgs]
    if len(tokens) != config.k:
        raise ValueError(f"placement holds {len(tokens)} messages, config.k={config.k}")
    if len(set(tokens)) != len(tokens):
        raise ValueError("message tokens must be distinct")
    unknown = sorted(v for v in placement if v not in set(graph.nodes))
    if unknown:
        raise ValueError(f"placement at unknown nodes: {unknown}")

    n = graph.node_count
    colors = lay.color_count or 1
    color = lay.color or {}
    depth = lay.depth
    source = lay.source
    k = config.k
    cap = config.cap_for(n)
    bound = gather_epoch_bound(depth, k, n, config.c_g)
    # Header: destination id, wave counter, delay field.  These routing
    # fields outgrow the 4*log(n) default budget, so gathering runs at h=12.
    header = id_bits(n) + 6 + max_previous_delay(k, cap, n).bit_length()
    check_header(Packet(None, header), header_budget(n, 12))
    ack = Packet(("ack",), header_bits=1)

    result = GatherResult(delivered={}, epochs_run=0)
    trace = RoundTrace("gather", seed)
    pending: dict[int, list[GatherPacket]] = {v: [] for v in graph.nodes}
    due: dict[int, set[int]] = {}

    def due_epoch(v: int, packet: GatherPacket) -> int:
        return depth - lay.layer[v] + packet.delay

    def enqueue(v: int, packet: GatherPacket) -> None:
        pending[v].append(packet)
        due.setdefault(due_epoch(v, packet), set()).add(v)

    for v in sorted(placement):
        rng = node_rng(seed, v, -1)
        for message in placement[v]:
            if v == source:
                result.delivered[message] = (0, 0)
                continue
            delay = rng.randrange(delay_window(k, 0, n))
            result.wave_log.append((message, 0, delay))
            enqueue(v, GatherPacket(message, lay.parent[v], 0, delay))

    delivered_count = len(result.delivered)
    epoch = -1
    while due:
        epoch = min(due)
        if epoch > bound:
            break
        holders = sorted(due.pop(epoch))
        for cycle in range(colors):
            matching = {
                v: [p for p in pending[v] if due_epoch(v, p) == epoch]
                for v in holders
                if color[v] == cycle
            }
            matching = {v: ps for v, ps in matching.items() if ps}
            txs: dict[int, Packet] = {}
            for v, ps in matching.items():
                if len(ps) == 1:
                    pkt = Packet(ps[0], header_bits=header)
                    txs[v] = pkt
            data_round = (epoch * colors + cycle) * 2
            outcome = transmit_step(graph, txs)
            trace.record(data_round, txs, outcome)

            acks: dict[int, Packet] = {}
            accepted: dict[int, GatherPacket] = {}
            for w in sorted(outcome.receptions):
                rec = outcome.receptions[w]
                packet = rec.packet.payload
                if not isinstance(packet, GatherPacket) or packet.destination != w:
                    continue
                if color[w] == cycle:
                    continue  # own-cycle listeners drop; sender will re-wave
                accepted[w] = packet
                acks[w] = ack
            ack_outcome = transmit_step(graph, acks)
            trace.record(data_round + 1, acks, ack_outcome)

            for w in sorted(accepted):
                packet = accepted[w]
                if w == source:
                    result.delivered[packet.message] = (epoch, packet.wave)
                    delivered_count += 1
                else:
                    enqueue(w, GatherPacket(packet.message, lay.parent[w], packet.wave, packet.delay))

            for v in sorted(matching):
                sent = txs.get(v)
                if sent is not None and ack_outcome.receptions.get(v) is not None:
                    pending[v].remove(sent.payload)
                rng = node_rng(seed, v, data_round)
                for packet in [p for p in pending[v] if due_epoch(v, p) == epoch]:
                    wave = packet.wave + 1
                    if wave > cap:
                        raise WaveCapExceeded(packet.message, cap)
                    delay = max_previous_delay(k, packet.wave, n) + rng.randrange(delay_window(k, wave, n))
                    pending[v].remove(packet)
                    result.wave_log.append((packet.message, wave, delay))
                    enqueue(v, GatherPacket(packet.message, packet.destination, wave, delay))
        result.epochs_run = epoch + 1
        if delivered_count == k:
            break

    trace.round_count = result.epochs_run * colors * 2
    leftovers = {v: [p.message for p in ps] for v, ps in pending.items() if ps}
    if leftovers:
        raise GatherIncomplete(result.delivered, leftovers)
    return result, trace
