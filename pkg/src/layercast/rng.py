"""Deterministic randomness: per-(seed, node, round) streams and node id hashing.

Every coin a protocol flips comes from a stream keyed by (run seed, node id,
round index), so drawn values never depend on the order in which nodes are
evaluated inside a round.
"""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1


def clog2(x: int) -> int:
    """Ceiling of log2(x) for x >= 1; clog2(1) == 0."""
    if x < 1:
        raise ValueError(f"clog2 needs x >= 1, got {x}")
    return (x - 1).bit_length()


def clog2_ratio(num: int, den: int) -> int:
    """Smallest t with 2**t >= num/den, in exact integer arithmetic."""
    if num < 1 or den < 1:
        raise ValueError("clog2_ratio arguments must be >= 1")
    t = 0
    while (den << t) < num:
        t += 1
    return t


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def mix(*parts: int) -> int:
    """Collapse any number of integers into one well-mixed 64-bit value."""
    acc = 0x8BADF00D5EEDC0DE
    for p in parts:
        acc = _splitmix64(acc ^ _splitmix64(p & _MASK64))
    return acc


def _mix3(a: int, b: int, c: int) -> int:
    """mix(a, b, c) with the six splitmix stages unrolled (hot path)."""
    acc = 0x8BADF00D5EEDC0DE
    for p in (a & _MASK64, b & _MASK64, c & _MASK64):
        p = (p + 0x9E3779B97F4A7C15) & _MASK64
        p ^= p >> 30
        p = (p * 0xBF58476D1CE4E5B9) & _MASK64
        p ^= p >> 27
        p = (p * 0x94D049BB133111EB) & _MASK64
        acc ^= p ^ (p >> 31)
        acc = (acc + 0x9E3779B97F4A7C15) & _MASK64
        acc ^= acc >> 30
        acc = (acc * 0xBF58476D1CE4E5B9) & _MASK64
        acc ^= acc >> 27
        acc = (acc * 0x94D049BB133111EB) & _MASK64
        acc ^= acc >> 31
    return acc


def node_rng(seed: int, node: int, round_index: int) -> random.Random:
    """Fresh generator for one node in one round.

    Streams for distinct (node, round) pairs are independent; re-creating a
    stream replays the same values.  The stream is salted away from the
    single-coin draw of the same round.
    """
    return random.Random(mix(seed, node, round_index, 0x5EED))


def coin_pow2(seed: int, node: int, round_index: int, exponent: int) -> bool:
    """True with probability exactly 2**-exponent, from the node's stream.

    Cheap single-draw path for the per-round transmit coin; exponents above
    64 bits never occur (they are at most log n + log log n).
    """
    if exponent <= 0:
        return True
    return _mix3(seed, node, round_index) & ((1 << exponent) - 1) == 0


def id_bits(n: int) -> int:
    """Width of one transmitted node id: four words of ceil(log2 n) bits."""
    return 4 * max(1, clog2(n) if n >= 1 else 1)


def node_label(seed: int, node: int, n: int) -> int:
    """Injective pseudo-random id for a node, id_bits(n) bits wide.

    A four-round Feistel permutation of the node index under seed-derived
    round keys: labels look random per seed but never collide.
    """
    if not 0 <= node < n:
        raise ValueError(f"node {node} out of range for n={n}")
    width = id_bits(n)
    half = width // 2
    mask = (1 << half) - 1
    left, right = node >> half, node & mask
    for i in range(4):
        left, right = right, left ^ (mix(seed, i, right) & mask)
    return (left << half) | right
