"""GF(2) linear algebra and network-coded multi-message broadcast.

Coefficient vectors and payloads are plain ints used as bitsets, following
the usual XOR-row convention: bit i of a coefficient word selects source
message i.  A node's store keeps every received packet plus an incrementally
reduced basis, so the first round its rank hits k is known exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .bc import BcParams, bc_value
from .graph import RadioGraph
from .layering import Layering, validate
from .rng import clog2, clog2_ratio, coin_pow2, node_rng
from .sim import Packet, RoundTrace, header_budget, transmit_step

log = logging.getLogger(__name__)


class IntegrityError(RuntimeError):
    """A packet's payload is inconsistent with its coefficients."""


class CodedPacket(NamedTuple):
    coefficients: int  # k-bit mask over source messages
    payload: int  # XOR of the selected messages


ZERO_PACKET = CodedPacket(0, 0)


def xor_combine(packets: list[CodedPacket], subset: int) -> CodedPacket:
    """XOR the packets selected by the subset bitmask; empty subset is zero."""
    if subset >> len(packets):
        raise ValueError("subset mask indexes beyond the packet list")
    coefficients = 0
    payload = 0
    while subset:
        low = subset & -subset
        pkt = packets[low.bit_length() - 1]
        coefficients ^= pkt.coefficients
        payload ^= pkt.payload
        subset ^= low
    return CodedPacket(coefficients, payload)


def gf2_rank(vectors: Iterable[int]) -> int:
    """Row rank over GF(2) of int bitset vectors, by Gaussian elimination."""
    pivots: dict[int, int] = {}
    for vec in vectors:
        cur = vec
        while cur:
            top = cur.bit_length() - 1
            if top in pivots:
                cur ^= pivots[top]
            else:
                pivots[top] = cur
                break
    return len(pivots)


@dataclass
class PacketStore:
    """Ordered packet collection with an incrementally maintained rank."""

    k: int
    packets: list[CodedPacket] = field(default_factory=list)
    rank: int = 0
    _pivots: dict[int, CodedPacket] = field(default_factory=dict)

    def add(self, packet: CodedPacket) -> bool:
        """Append the packet; True when it raised the rank."""
        self.packets.append(packet)
        if self.rank >= self.k:
            return False
        coeff, payload = packet
        while coeff:
            top = coeff.bit_length() - 1
            piv = self._pivots.get(top)
            if piv is None:
                self._pivots[top] = CodedPacket(coeff, payload)
                self.rank += 1
                return True
            coeff ^= piv.coefficients
            payload ^= piv.payload
        if payload:
            raise IntegrityError("zero coefficients with non-zero payload")
        return False

    def solve(self) -> list[int] | None:
        """Back-substitute the reduced basis; None when rank < k."""
        if self.rank < self.k:
            return None
        return _back_substitute(self._pivots, self.k)


def _back_substitute(pivots: dict[int, CodedPacket], k: int) -> list[int]:
    """Turn leading-bit pivot rows into the k unit-vector payloads.

    Row i leads at bit i with dirt only below; once rows 0..i-1 are reduced
    to unit vectors, clearing a low bit j of row i just XORs message j in.
    """
    messages: list[int] = []
    for i in range(k):
        row = pivots.get(i)
        if row is None or row.coefficients.bit_length() - 1 != i:
            raise IntegrityError("pivot structure broken; cannot isolate basis")
        payload = row.payload
        rem = row.coefficients ^ (1 << i)
        while rem:
            j = rem.bit_length() - 1
            payload ^= messages[j]
            rem ^= 1 << j
        messages.append(payload)
    return messages


def decode(store: PacketStore, k: int) -> list[int] | None:
    """Solve for the k original messages, or None when rank < k.

    Runs a fresh elimination over the stored packets so it does not trust
    the incremental bookkeeping.
    """
    pivots: dict[int, CodedPacket] = {}
    for packet in store.packets:
        coeff, payload = packet
        while coeff:
            top = coeff.bit_length() - 1
            piv = pivots.get(top)
            if piv is None:
                pivots[top] = CodedPacket(coeff, payload)
                break
            coeff ^= piv.coefficients
            payload ^= piv.payload
        else:
            if payload:
                raise IntegrityError("zero coefficients with non-zero payload")
    if len(pivots) < k:
        return None
    return _back_substitute(pivots, k)


def knows_projection(store: PacketStore, mu: int) -> bool:
    """True iff some stored coefficient vector is non-perpendicular to mu."""
    return any((packet.coefficients & mu).bit_count() & 1 for packet in store.packets)


@dataclass(frozen=True)
class NcConfig:
    layering: Layering
    k: int
    c_nc: int = 8

    def bc_params(self, n: int) -> BcParams:
        d_prime = max(1, self.layering.depth)
        log_n = max(1, clog2(max(n, 2)))
        return BcParams(log_n, min(log_n, max(1, clog2_ratio(n, d_prime))))

    def round_budget(self, n: int) -> int:
        """Iterations c_nc * (D' log(n/D') + k log n + log^2 n)."""
        d_prime = max(1, self.layering.depth)
        log_n = max(1, clog2(max(n, 2)))
        log_nd = max(1, clog2_ratio(n, d_prime))
        return self.c_nc * (d_prime * log_nd + self.k * log_n + log_n * log_n)


@dataclass
class NcResult:
    decode_round: dict[int, int | None]
    packets_received: dict[int, int]
    decoded: dict[int, tuple[int, ...] | None] = field(default_factory=dict)

    def all_decoded(self) -> bool:
        return all(r is not None for r in self.decode_round.values())


def nc_broadcast(
    graph: RadioGraph,
    config: NcConfig,
    messages: list[int],
    seed: int,
) -> tuple[NcResult, RoundTrace]:
    """Broadcast k messages from the layering source by random subset-XOR.

    Iterations run C one-round color cycles; in its own cycle a node with a
    non-empty store transmits, with schedule probability 2^-b, the XOR of a
    uniformly random subset of everything it has received.  Decode round is
    the first round a node's coefficient rank reaches k.  The loop stops once
    every node has decoded; later rounds change nothing that is measured.
    """
    lay = config.layering
    if len(messages) != config.k:
        raise ValueError(f"expected {config.k} messages, got {len(messages)}")
    if not lay.is_colored():
        raise ValueError("coded broadcast needs a colored layering")
    report = validate(graph, lay)
    if not report.valid or not report.collision_free:
        raise ValueError("layering must validate as collision-free")

    n = graph.node_count
    k = config.k
    colors = lay.color_count or 1
    color = lay.color or {}
    bc = config.bc_params(n)
    budget = config.round_budget(n)
    if k > header_budget(n):
        # coefficient headers ride on the size exemption; note the overshoot
        log.info("coefficient header of %d bits exceeds the standard %d-bit budget", k, header_budget(n))
    trace = RoundTrace("ncbc", seed)

    stores = {v: PacketStore(k) for v in graph.nodes}
    for i, message in enumerate(messages):
        stores[lay.source].add(CodedPacket(1 << i, message))
    # Packed single-int mirror of each store: (coefficients << shift) | payload,
    # so the subset fold costs one XOR per selected packet.
    shift = max((m.bit_length() for m in messages), default=1) or 1
    payload_mask = (1 << shift) - 1
    packed: dict[int, list[int]] = {
        v: [(p.coefficients << shift) | p.payload for p in stores[v].packets] for v in graph.nodes
    }
    result = NcResult(
        decode_round={v: (0 if v == lay.source and k > 0 else None) for v in graph.nodes},
        packets_received={v: 0 for v in graph.nodes},
    )
    if k == 0:
        result.decode_round = {v: 0 for v in graph.nodes}
        result.decoded = {v: () for v in graph.nodes}
        return result, trace

    by_color: dict[int, list[int]] = {}
    for v in sorted(graph.nodes):
        by_color.setdefault(color[v], []).append(v)

    rnd = 0
    for i in range(1, budget + 1):
        exponent = bc_value(i - 1, bc)
        for cycle in range(colors):
            rnd = (i - 1) * colors + cycle
            txs: dict[int, Packet] = {}
            for v in by_color.get(cycle, ()):
                rows = packed[v]
                if not rows:
                    continue
                if coin_pow2(seed, v, rnd, exponent):
                    mask = node_rng(seed, v, rnd).getrandbits(len(rows))
                    acc = 0
                    while mask:
                        low = mask & -mask
                        acc ^= rows[low.bit_length() - 1]
                        mask ^= low
                    combined = CodedPacket(acc >> shift, acc & payload_mask)
                    txs[v] = Packet(combined, header_bits=k, exempt=True)
            outcome = transmit_step(graph, txs)
            for w in sorted(outcome.receptions):
                rec = outcome.receptions[w]
                store = stores[w]
                result.packets_received[w] += 1
                # Once the span is the full space, further packets cannot
                # change it, so the store is frozen: a uniform subset of the
                # frozen store transmits the same distribution.
                if store.rank < k:
                    pkt: CodedPacket = rec.packet.payload
                    grew = store.add(pkt)
                    packed[w].append((pkt.coefficients << shift) | pkt.payload)
                    if grew and store.rank == k and result.decode_round[w] is None:
                        result.decode_round[w] = rnd
            trace.record(rnd, txs, outcome)
        if all(r is not None for r in result.decode_round.values()):
            break
    trace.round_count = rnd + 1
    for v in graph.nodes:
        solved = stores[v].solve()
        result.decoded[v] = tuple(solved) if solved is not None else None
    return result, trace
