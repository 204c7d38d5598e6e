"""Experiment runner: sweeps, metrics CSV, and scaling fits.

Protocol round bounds in this package are order-of-growth claims with hidden
constants, so the harness measures rounds across graph sweeps and fits a
single constant against a model expression; the max observed/predicted ratio
says how honest the model is at desk scale.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, NamedTuple

from .build import ConstructionError, build_pseudo_bfs_traced
from .coding import NcConfig, nc_broadcast
from .crbc import CrConfig, cr_broadcast, cr_phase_count
from .bc import BcParams
from .gathering import GatherConfig, GatherError, gather
from .graph import RadioGraph
from .layering import validate
from .pipelines import generate_graph, gossip, multi_source_broadcast
from .rng import clog2, clog2_ratio, node_rng


class SpecError(ValueError):
    pass


class MetricsRow(NamedTuple):
    protocol: str
    n: int
    d: int
    k: int
    c: int
    seed: int
    rounds: int
    success: bool
    notes: str


CSV_HEADER = ["protocol", "n", "D", "k", "C", "seed", "rounds", "success", "notes"]


@dataclass(frozen=True)
class SweepPoint:
    family: str
    params: dict
    graph_seed: int = 0


@dataclass
class ExperimentSpec:
    protocol: str
    sweep: list[SweepPoint]
    seeds: list[int]
    constants: dict[str, int] = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        raw = json.loads(text)
        sweep = [
            SweepPoint(pt["family"], dict(pt.get("params", {})), int(pt.get("graph_seed", 0)))
            for pt in raw.get("sweep", [])
        ]
        return cls(
            protocol=raw["protocol"],
            sweep=sweep,
            seeds=[int(s) for s in raw.get("seeds", [])],
            constants={str(k): int(v) for k, v in raw.get("constants", {}).items()},
            output=raw.get("output"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_json(Path(path).read_text())


class _RunOutcome(NamedTuple):
    rounds: int
    success: bool
    k: int
    c: int
    notes: str


def _run_crbc(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    n = graph.node_count
    params = BcParams.from_n_d(n, graph.diameter)
    delta = consts.get("delta") or params.log_nd
    c1, c2 = consts.get("c1", 8), consts.get("c2", 8)
    phases = cr_phase_count(graph.diameter, n, delta, c1, c2)
    source = consts.get("source", 0)
    config = CrConfig(frozenset({source}), frozenset(graph.nodes) - {source}, delta, phases, params)
    result, trace = cr_broadcast(graph, config, {source: ("m", source)}, seed)
    missing = [v for v in graph.nodes if v != source and v not in result.first_reception]
    if missing:
        return _RunOutcome(trace.round_count, False, 1, 0, f"{len(missing)} nodes missed")
    completion = max(fr.round_index for fr in result.first_reception.values()) + 1
    return _RunOutcome(completion, True, 1, 0, "")


def _run_pseudo_bfs(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    a, b = consts.get("a", 16), consts.get("b", 16)
    try:
        lay, traces = build_pseudo_bfs_traced(
            graph, consts.get("source", 0), 1.0 / consts.get("inv_eps", 2), seed
        )
    except ConstructionError as exc:
        return _RunOutcome(0, False, 0, 0, str(exc))
    rounds = sum(t.round_count for t in traces)
    report = validate(graph, lay)
    log_n = max(1, clog2(max(graph.node_count, 2)))
    depth_ok = report.depth <= a * graph.diameter + b * log_n
    notes = f"depth={report.depth}"
    if not report.valid:
        notes += f";invalid:{report.violations[0].kind}"
    if not depth_ok:
        notes += ";depth-bound"
    return _RunOutcome(rounds, report.valid and depth_ok, 0, lay.color_count or 0, notes)


def _pseudo_bfs_layering(graph: RadioGraph, consts: Mapping[str, int]):
    lay, _ = build_pseudo_bfs_traced(
        graph, consts.get("source", 0), 1.0 / consts.get("inv_eps", 2), consts.get("layer_seed", 0)
    )
    return lay


def _run_gather(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    k = consts.get("k", 16)
    lay = _pseudo_bfs_layering(graph, consts)
    config = GatherConfig(lay, k, c_g=consts.get("c_g", 4), wave_cap=consts.get("wave_cap"))
    rng = node_rng(seed, -1, -1)
    placement: dict[int, list] = {}
    for i in range(k):
        placement.setdefault(rng.randrange(graph.node_count), []).append(f"m{i}")
    try:
        result, trace = gather(graph, config, placement, seed)
    except GatherError as exc:
        return _RunOutcome(0, False, k, lay.color_count or 0, str(exc)[:80])
    return _RunOutcome(trace.round_count, True, k, lay.color_count or 0, "")


def _run_ncbc(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    k = consts.get("k", 8)
    lay = _pseudo_bfs_layering(graph, consts)
    config = NcConfig(lay, k, c_nc=consts.get("c_nc", 8))
    rng = node_rng(seed, -2, -2)
    messages = [rng.getrandbits(32) for _ in range(k)]
    result, trace = nc_broadcast(graph, config, messages, seed)
    ok = result.all_decoded() and all(
        result.decoded[v] == tuple(messages) for v in graph.nodes
    )
    notes = "" if ok else "incomplete decode"
    return _RunOutcome(trace.round_count, ok, k, lay.color_count or 0, notes)


def _run_gossip(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    result = gossip(graph, consts.get("leader", 0), seed, c_g=consts.get("c_g", 4), c_nc=consts.get("c_nc", 8))
    notes = "" if result.success else (result.failure or "failed")[:80]
    return _RunOutcome(result.total_rounds, result.success, graph.node_count, 0, notes)


def _run_msbc(graph: RadioGraph, seed: int, consts: Mapping[str, int]) -> _RunOutcome:
    k = consts.get("k", 8)
    rng = node_rng(seed, -3, -3)
    sources: dict[int, list[int]] = {}
    for i in range(k):
        sources.setdefault(rng.randrange(graph.node_count), []).append(rng.getrandbits(32))
    result = multi_source_broadcast(graph, sources, consts.get("leader", 0), seed)
    notes = "" if result.success else (result.failure or "failed")[:80]
    return _RunOutcome(result.total_rounds, result.success, k, 0, notes)


_PROTOCOLS: dict[str, tuple[Callable, frozenset[str]]] = {
    "crbc": (_run_crbc, frozenset({"c1", "c2", "delta", "source"})),
    "pseudo_bfs": (_run_pseudo_bfs, frozenset({"a", "b", "source", "inv_eps"})),
    "gather": (_run_gather, frozenset({"k", "c_g", "wave_cap", "source", "inv_eps", "layer_seed"})),
    "ncbc": (_run_ncbc, frozenset({"k", "c_nc", "source", "inv_eps", "layer_seed"})),
    "gossip": (_run_gossip, frozenset({"leader", "c_g", "c_nc"})),
    "msbc": (_run_msbc, frozenset({"k", "leader"})),
}


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.protocol not in _PROTOCOLS:
        raise SpecError(f"unknown protocol {spec.protocol!r}")
    allowed = _PROTOCOLS[spec.protocol][1]
    unknown = sorted(set(spec.constants) - allowed)
    if unknown:
        raise SpecError(f"constants not recognized by {spec.protocol}: {unknown}")


def run_experiment(spec: ExperimentSpec) -> list[MetricsRow]:
    """Execute every (sweep point, seed) pair; failures become rows, not crashes."""
    validate_spec(spec)
    runner = _PROTOCOLS[spec.protocol][0]
    rows: list[MetricsRow] = []
    for point in spec.sweep:
        graph = generate_graph(point.family, point.params, point.graph_seed)
        for seed in spec.seeds:
            try:
                out = runner(graph, seed, spec.constants)
            except Exception as exc:  # failures are data, never silently dropped
                out = _RunOutcome(0, False, 0, 0, f"{type(exc).__name__}: {exc}"[:100])
            rows.append(
                MetricsRow(
                    spec.protocol,
                    graph.node_count,
                    graph.diameter,
                    out.k,
                    out.c,
                    seed,
                    out.rounds,
                    out.success,
                    out.notes,
                )
            )
    if spec.output:
        write_metrics(rows, spec.output)
    return rows


def format_metrics(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [row.protocol, row.n, row.d, row.k, row.c, row.seed, row.rounds, int(row.success), row.notes]
        )
    return buf.getvalue()


def write_metrics(rows: list[MetricsRow], path: str | Path) -> None:
    Path(path).write_text(format_metrics(rows))


def read_metrics(path: str | Path) -> list[MetricsRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise SpecError(f"unexpected metrics header: {header}")
        for rec in reader:
            rows.append(
                MetricsRow(
                    rec[0], int(rec[1]), int(rec[2]), int(rec[3]), int(rec[4]),
                    int(rec[5]), int(rec[6]), bool(int(rec[7])), rec[8],
                )
            )
    return rows


class FitResult(NamedTuple):
    constant: float
    max_ratio: float


def _model_value(expr: str, row: MetricsRow) -> float:
    names = {
        "n": float(row.n),
        "D": float(row.d),
        "k": float(row.k),
        "logn": float(max(1, clog2(max(row.n, 2)))),
        "lognD": float(max(1, clog2_ratio(row.n, max(row.d, 1)))),
    }
    try:
        value = eval(expr, {"__builtins__": {}}, names)  # expression over n, D, k, logn, lognD
    except Exception as exc:
        raise SpecError(f"cannot evaluate model {expr!r}: {exc}") from exc
    return float(value)


def fit_scaling(rows: list[MetricsRow], model: str) -> FitResult:
    """Least-squares fit rounds = c * model; reports c and max rounds/(c*model).

    The model is an expression over n, D, k, logn and lognD, e.g.
    "D*lognD + logn**2" or "n*logn".
    """
    if len({(r.n, r.d, r.k) for r in rows}) < 2:
        raise SpecError("need at least two distinct sweep points to fit")
    pairs = [(float(r.rounds), _model_value(model, r)) for r in rows]
    denom = sum(m * m for _, m in pairs)
    if denom == 0:
        raise SpecError(f"model {model!r} is zero on every row")
    constant = sum(r * m for r, m in pairs) / denom
    if constant == 0:
        raise SpecError("fitted constant is zero; rounds are all zero?")
    max_ratio = max(r / (constant * m) for r, m in pairs if m > 0)
    return FitResult(constant, max_ratio)
