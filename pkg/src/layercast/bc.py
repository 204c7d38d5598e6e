"""Transmit-probability exponent schedule and its density validators.

The schedule interleaves three subsequences.  Position 3j carries a sparse
high-exponent ruler pattern, position 3j+1 cycles the exponents needed at
diameter scale, and position 3j+2 cycles the full exponent range.  A round
with value b means "transmit with probability 2**-b".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .rng import clog2, clog2_ratio


@dataclass(frozen=True)
class BcParams:
    """Schedule parameters: log_n = ceil(log2 n), log_nd = ceil(log2 n/D)."""

    log_n: int
    log_nd: int

    def __post_init__(self) -> None:
        if self.log_n < 1 or self.log_nd < 1:
            raise ValueError("log parameters must be >= 1")
        if self.log_nd > self.log_n:
            raise ValueError("log_nd must not exceed log_n")

    @classmethod
    def from_n_d(cls, n: int, d: int) -> "BcParams":
        log_n = max(1, clog2(max(n, 2)))
        log_nd = min(log_n, max(1, clog2_ratio(n, max(d, 1))))
        return cls(log_n, log_nd)


def _trailing_zeros(x: int) -> int:
    return (x & -x).bit_length() - 1


def bc_value(index: int, params: BcParams) -> int:
    """Exponent at a schedule position; total for every index >= 0."""
    if index < 0:
        raise ValueError("index must be >= 0")
    j, r = divmod(index, 3)
    if r == 1:
        return j % params.log_nd
    if r == 2:
        return j % params.log_n
    # Position 3j: j is folded into [1, log_n] so every j gets a ruler value.
    jp = ((j - 1) % params.log_n) + 1
    return params.log_nd + _trailing_zeros(jp)


def max_ruler_step(params: BcParams) -> int:
    """Largest extra exponent the 3j subsequence realizes: floor(log2 log_n)."""
    return params.log_n.bit_length() - 1


@dataclass
class DensityReport:
    """Result of the three windowed density checks."""

    property1_ok: bool
    property2_ok: bool
    property3_ok: bool
    witnesses: dict[str, object] = field(default_factory=dict)
    windows: dict[str, object] = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return self.property1_ok and self.property2_ok and self.property3_ok

    def to_json(self) -> str:
        return json.dumps(
            {
                "property1_ok": self.property1_ok,
                "property2_ok": self.property2_ok,
                "property3_ok": self.property3_ok,
                "witnesses": self.witnesses,
                "windows": self.windows,
            },
            indent=2,
            sort_keys=True,
        )


def _coverage_failure(
    seq: list[int],
    window: int,
    residue: int,
    alphabet: set[int],
    window_count: int,
) -> int | None:
    """First window start whose residue-positions miss part of the alphabet."""
    counts: dict[int, int] = {a: 0 for a in alphabet}
    covered = 0

    def add(i: int, delta: int) -> int:
        nonlocal covered
        if i % 3 != residue:
            return 0
        v = seq[i]
        if v not in counts:
            return 0
        before = counts[v]
        counts[v] = before + delta
        if delta > 0 and before == 0:
            covered += 1
        elif delta < 0 and before == 1:
            covered -= 1
        return 0

    for i in range(window):
        add(i, +1)
    for start in range(window_count):
        if covered != len(alphabet):
            return start
        add(start, -1)
        add(start + window, +1)
    return None


def check_density(
    params: BcParams,
    window_count: int,
    window_overrides: dict[str, int] | None = None,
) -> DensityReport:
    """Slide window_count windows over the schedule and check all three densities.

    P1: every window of 3*log_nd elements contains each value in
    {0..log_nd-1} among its 3j+1 positions.  P2: for each realized ruler step
    t, every window of 3*log_n*2**t elements contains value log_nd+t at a 3j
    position.  P3: every window of 3*log_n elements contains each value in
    {0..log_n-1} among its 3j+2 positions.

    window_overrides shrinks or stretches individual windows ("P1", "P2",
    "P3"), which is how a deliberately truncated window is shown to fail.
    """
    if window_count < 1:
        raise ValueError("window_count must be >= 1")
    overrides = window_overrides or {}
    t_max = max_ruler_step(params)
    w1 = overrides.get("P1", 3 * params.log_nd)
    w3 = overrides.get("P3", 3 * params.log_n)
    w2_base = overrides.get("P2")
    longest = max(w1, w3, 3 * params.log_n * (1 << t_max) if w2_base is None else w2_base)
    seq = [bc_value(i, params) for i in range(window_count + longest + 3)]

    witnesses: dict[str, object] = {}
    windows: dict[str, object] = {"P1": w1, "P3": w3, "P2": {}}

    bad1 = _coverage_failure(seq, w1, 1, set(range(params.log_nd)), window_count)
    if bad1 is not None:
        witnesses["P1"] = bad1
    bad3 = _coverage_failure(seq, w3, 2, set(range(params.log_n)), window_count)
    if bad3 is not None:
        witnesses["P3"] = bad3
    ok2 = True
    for t in range(t_max + 1):
        w2 = w2_base if w2_base is not None else 3 * params.log_n * (1 << t)
        windows["P2"][params.log_nd + t] = w2
        bad2 = _coverage_failure(seq, w2, 0, {params.log_nd + t}, window_count)
        if bad2 is not None and ok2:
            ok2 = False
            witnesses["P2"] = [params.log_nd + t, bad2]
    return DensityReport(bad1 is None, ok2, bad3 is None, witnesses, windows)
