"""Command-line front end.

Subcommands mirror the library: gen, bc dump/check, crbc, layer build/
validate/refine, gather, ncbc, gossip, msbc, exp run.  Output is CSV or JSON
on stdout; traces and metrics go to files when requested.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bc import BcParams, bc_value, check_density
from .build import (
    basic_layering_traced,
    build_pseudo_bfs_traced,
    refine_lra_traced,
    refine_recursive_traced,
)
from .coding import NcConfig, nc_broadcast
from .crbc import CrConfig, cr_broadcast, cr_phase_count
from .gathering import GatherConfig, GatherError, gather
from .graph import read_graph, write_graph
from .harness import ExperimentSpec, MetricsRow, format_metrics, run_experiment, write_metrics
from .layering import read_layering, validate, write_layering
from .pipelines import PipelineResult, generate_graph, gnp_threshold_probability, gossip, multi_source_broadcast
from .rng import node_rng


def _emit_trace(traces, path: str | None) -> None:
    if not path:
        return
    from .sim import RoundTrace

    if isinstance(traces, RoundTrace):
        traces = [traces]
    combined = RoundTrace("cli", 0)
    base = 0
    for t in traces:
        combined.rounds.extend(t.shifted(base).rounds)
        base += t.round_count
    combined.round_count = base
    combined.write_jsonl(path)


def _parse_placement(spec: str, n: int, seed: int) -> dict[int, list[str]]:
    if spec.startswith("random:"):
        k = int(spec.split(":", 1)[1])
        rng = node_rng(seed, -1, -1)
        placement: dict[int, list[str]] = {}
        for i in range(k):
            placement.setdefault(rng.randrange(n), []).append(f"m{i}")
        return placement
    placement = {}
    counter = 0
    with open(spec) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            node, count = (int(x) for x in line.split())
            placement.setdefault(node, []).extend(f"m{counter + i}" for i in range(count))
            counter += count
    return placement


def _pipeline_report(result: PipelineResult, metrics_path: str | None, protocol: str, row_args) -> None:
    print(
        json.dumps(
            {
                "stages": result.stages,
                "total_rounds": result.total_rounds,
                "success": result.success,
                "failure": result.failure,
            },
            indent=2,
        )
    )
    if metrics_path:
        graph, seed, k = row_args
        row = MetricsRow(
            protocol, graph.node_count, graph.diameter, k, 0, seed,
            result.total_rounds, result.success, result.failure or "",
        )
        write_metrics([row], metrics_path)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="layercast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a graph file")
    p_gen.add_argument("family", choices=["path", "cycle", "grid", "star", "tree", "gnp", "ring_of_cliques", "complete"])
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--rows", type=int)
    p_gen.add_argument("--cols", type=int)
    p_gen.add_argument("--p", type=float)
    p_gen.add_argument("--cliques", type=int)
    p_gen.add_argument("--clique-size", type=int, dest="clique_size")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--emit-trace")
    p_gen.add_argument("--metrics")

    p_bc = sub.add_parser("bc", help="probability-exponent schedule tools")
    bc_sub = p_bc.add_subparsers(dest="bc_command", required=True)
    p_dump = bc_sub.add_parser("dump")
    p_dump.add_argument("--n", type=int, required=True)
    p_dump.add_argument("--d", type=int, required=True)
    p_dump.add_argument("--count", type=int, default=100)
    p_check = bc_sub.add_parser("check")
    p_check.add_argument("--n", type=int, required=True)
    p_check.add_argument("--d", type=int, required=True)
    p_check.add_argument("--windows", type=int, default=10000)

    p_crbc = sub.add_parser("crbc", help="randomized flooding broadcast")
    p_crbc.add_argument("--graph", required=True)
    p_crbc.add_argument("--source", type=int, required=True)
    p_crbc.add_argument("--delta", type=int, required=True)
    p_crbc.add_argument("--seed", type=int, required=True)
    p_crbc.add_argument("--phases", type=int)
    p_crbc.add_argument("--c1", type=int, default=8)
    p_crbc.add_argument("--c2", type=int, default=8)
    p_crbc.add_argument("--emit-trace")

    p_layer = sub.add_parser("layer", help="layering construction and validation")
    layer_sub = p_layer.add_subparsers(dest="layer_command", required=True)
    p_build = layer_sub.add_parser("build")
    p_build.add_argument("--graph", required=True)
    p_build.add_argument("--source", type=int, required=True)
    p_build.add_argument("--method", choices=["pseudo", "basic", "bfs"], default="pseudo")
    p_build.add_argument("--eps", type=float, default=0.5)
    p_build.add_argument("--delta", type=int)
    p_build.add_argument("--seed", type=int, default=0)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--emit-trace")
    p_validate = layer_sub.add_parser("validate")
    p_validate.add_argument("--graph", required=True)
    p_validate.add_argument("--layering", required=True)
    p_refine = layer_sub.add_parser("refine")
    p_refine.add_argument("--graph", required=True)
    p_refine.add_argument("--layering", required=True)
    p_refine.add_argument("--d", type=int)
    p_refine.add_argument("--recursive", type=int, metavar="R")
    p_refine.add_argument("--seed", type=int, default=0)
    p_refine.add_argument("--out", required=True)
    p_refine.add_argument("--emit-trace")

    p_gather = sub.add_parser("gather", help="collect k messages at the layering source")
    p_gather.add_argument("--graph", required=True)
    p_gather.add_argument("--layering", required=True)
    p_gather.add_argument("--place", required=True, help="random:K or a file of 'node count' lines")
    p_gather.add_argument("--seed", type=int, required=True)
    p_gather.add_argument("--c-g", type=int, default=4, dest="c_g")
    p_gather.add_argument("--wave-cap", type=int, dest="wave_cap")
    p_gather.add_argument("--emit-trace")

    p_ncbc = sub.add_parser("ncbc", help="network-coded k-message broadcast")
    p_ncbc.add_argument("--graph", required=True)
    p_ncbc.add_argument("--layering", required=True)
    p_ncbc.add_argument("--k", type=int, required=True)
    p_ncbc.add_argument("--seed", type=int, required=True)
    p_ncbc.add_argument("--c-nc", type=int, default=8, dest="c_nc")
    p_ncbc.add_argument("--msg-bits", type=int, default=32, dest="msg_bits")
    p_ncbc.add_argument("--emit-trace")

    p_gossip = sub.add_parser("gossip", help="all-to-all broadcast pipeline")
    p_gossip.add_argument("--graph", required=True)
    p_gossip.add_argument("--leader", type=int, required=True)
    p_gossip.add_argument("--seed", type=int, required=True)
    p_gossip.add_argument("--emit-trace")
    p_gossip.add_argument("--metrics")

    p_msbc = sub.add_parser("msbc", help="multi-source k-message broadcast pipeline")
    p_msbc.add_argument("--graph", required=True)
    p_msbc.add_argument("--leader", type=int, required=True)
    p_msbc.add_argument("--sources", required=True, help="random:K or a file of 'node count' lines")
    p_msbc.add_argument("--seed", type=int, required=True)
    p_msbc.add_argument("--emit-trace")
    p_msbc.add_argument("--metrics")

    p_exp = sub.add_parser("exp", help="experiment harness")
    exp_sub = p_exp.add_subparsers(dest="exp_command", required=True)
    p_run = exp_sub.add_parser("run")
    p_run.add_argument("spec")

    args = parser.parse_args(argv)

    if args.command == "gen":
        params = {}
        for key in ("n", "rows", "cols", "p", "cliques", "clique_size"):
            value = getattr(args, key, None)
            if value is not None:
                params[key] = value
        if args.family == "gnp" and "p" not in params and "n" in params:
            params["p"] = gnp_threshold_probability(params["n"])
        graph = generate_graph(args.family, params, args.seed)
        write_graph(graph, args.out)
        if args.emit_trace:  # generation consumes no radio rounds
            _emit_trace([], args.emit_trace)
        if args.metrics:
            row = MetricsRow("gen", graph.node_count, graph.diameter, 0, 0, args.seed, 0, True, args.family)
            write_metrics([row], args.metrics)
        print(f"wrote {args.family} graph: n={graph.node_count} m={graph.edge_count()} D={graph.diameter}")
        return 0

    if args.command == "bc":
        params = BcParams.from_n_d(args.n, args.d)
        if args.bc_command == "dump":
            print("index,value")
            for i in range(args.count):
                print(f"{i},{bc_value(i, params)}")
        else:
            report = check_density(params, args.windows)
            print(report.to_json())
            return 0 if report.all_ok else 1
        return 0

    if args.command == "crbc":
        graph = read_graph(args.graph)
        params = BcParams.from_n_d(graph.node_count, graph.diameter)
        phases = args.phases or cr_phase_count(graph.diameter, graph.node_count, args.delta, args.c1, args.c2)
        config = CrConfig(
            frozenset({args.source}),
            frozenset(graph.nodes) - {args.source},
            args.delta,
            phases,
            params,
        )
        result, trace = cr_broadcast(graph, config, {args.source: ("m", args.source)}, args.seed)
        _emit_trace(trace, args.emit_trace)
        print("node,phase,round,sender")
        for v in sorted(result.first_reception):
            fr = result.first_reception[v]
            print(f"{v},{fr.phase},{fr.round_index},{fr.sender}")
        delivered = len(set(result.first_reception) | {args.source})
        print(f"# delivered {delivered}/{graph.node_count} in {trace.round_count} rounds", file=sys.stderr)
        return 0 if delivered == graph.node_count else 1

    if args.command == "layer":
        graph = read_graph(args.graph)
        if args.layer_command == "build":
            if args.method == "bfs":
                from .layering import bfs_layering

                lay, traces = bfs_layering(graph, args.source), []
            elif args.method == "basic":
                delta = args.delta or BcParams.from_n_d(graph.node_count, graph.diameter).log_nd
                lay, trace = basic_layering_traced(graph, args.source, delta, args.seed)
                traces = [trace]
            else:
                lay, traces = build_pseudo_bfs_traced(graph, args.source, args.eps, args.seed)
            write_layering(lay, args.out)
            _emit_trace(traces, args.emit_trace)
            rounds = sum(t.round_count for t in traces)
            print(f"wrote layering: depth={lay.depth} colors={lay.color_count} rounds={rounds}")
            return 0
        if args.layer_command == "validate":
            lay = read_layering(args.layering)
            report = validate(graph, lay)
            print(
                json.dumps(
                    {
                        "valid": report.valid,
                        "depth": report.depth,
                        "stretch": report.stretch,
                        "collision_free": report.collision_free,
                        "violations": [[v.kind, list(v.nodes)] for v in report.violations],
                    },
                    indent=2,
                )
            )
            return 0 if report.valid else 1
        lay = read_layering(args.layering)
        if args.recursive:
            refined, traces = refine_recursive_traced(graph, lay, args.recursive, args.seed)
        else:
            d = args.d or max(1, validate(graph, lay).stretch)
            refined, traces = refine_lra_traced(graph, lay, d, args.seed)
        write_layering(refined, args.out)
        _emit_trace(traces, args.emit_trace)
        print(f"wrote refined layering: depth={refined.depth} colors={refined.color_count}")
        return 0

    if args.command == "gather":
        graph = read_graph(args.graph)
        lay = read_layering(args.layering)
        placement = _parse_placement(args.place, graph.node_count, args.seed)
        k = sum(len(m) for m in placement.values())
        config = GatherConfig(lay, k, c_g=args.c_g, wave_cap=args.wave_cap)
        try:
            result, trace = gather(graph, config, placement, args.seed)
        except GatherError as exc:
            print(f"gather failed: {exc}", file=sys.stderr)
            return 1
        _emit_trace(trace, args.emit_trace)
        print("message,arrival_epoch,waves_used")
        for message in sorted(result.delivered, key=str):
            epoch, waves = result.delivered[message]
            print(f"{message},{epoch},{waves}")
        return 0

    if args.command == "ncbc":
        graph = read_graph(args.graph)
        lay = read_layering(args.layering)
        rng = node_rng(args.seed, -2, -2)
        messages = [rng.getrandbits(args.msg_bits) for _ in range(args.k)]
        config = NcConfig(lay, args.k, c_nc=args.c_nc)
        result, trace = nc_broadcast(graph, config, messages, args.seed)
        _emit_trace(trace, args.emit_trace)
        print("node,decode_round,packets_received")
        for v in sorted(result.decode_round):
            rd = result.decode_round[v]
            print(f"{v},{'' if rd is None else rd},{result.packets_received[v]}")
        return 0 if result.all_decoded() else 1

    if args.command == "gossip":
        graph = read_graph(args.graph)
        result = gossip(graph, args.leader, args.seed)
        _emit_trace(result.traces, args.emit_trace)
        _pipeline_report(result, args.metrics, "gossip", (graph, args.seed, graph.node_count))
        return 0 if result.success else 1

    if args.command == "msbc":
        graph = read_graph(args.graph)
        placement = _parse_placement(args.sources, graph.node_count, args.seed)
        rng = node_rng(args.seed, -3, -3)
        sources = {v: [rng.getrandbits(32) for _ in msgs] for v, msgs in placement.items()}
        result = multi_source_broadcast(graph, sources, args.leader, args.seed)
        _emit_trace(result.traces, args.emit_trace)
        _pipeline_report(result, args.metrics, "msbc", (graph, args.seed, sum(len(m) for m in sources.values())))
        return 0 if result.success else 1

    if args.command == "exp":
        spec = ExperimentSpec.load(args.spec)
        rows = run_experiment(spec)
        if spec.output:
            print(f"wrote {len(rows)} rows to {spec.output}")
        else:
            print(format_metrics(rows), end="")
        return 0

    parser.error(f"unhandled command {args.command}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
