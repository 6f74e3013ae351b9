"""Command-line driver: run the experiment, sweep the rate weight, or inspect a pruning.

Subcommands:
  run    train the selected schemes over seeds and emit CSV results
  sweep  trace the rate-loss frontier over a rate-weight grid
  prune  print edge costs, the shortest-path tree, and the exchange gain
         for a topology file, without any training
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import defaults
from .engine import TrainConfig
from .graph import (
    build_spt,
    edge_cost,
    exchange_bits,
    full_topology,
    load_topology,
    reduction_ratio,
    reference_topology_path,
    reverse_dijkstra,
)
from .harness import emit_results, run_experiment, summarize, sweep_lambda, write_frontier_csv
from .task import TaskSpec


def _add_topology_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--topology",
        default=str(reference_topology_path()),
        help="topology JSON file (default: bundled 10-node reference network)",
    )


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seeds", type=int, default=defaults.DEFAULT_SEED_COUNT,
                        help="number of seeds (runs use seeds 0..N-1)")
    parser.add_argument("--master-seed", type=int, default=defaults.DEFAULT_MASTER_SEED,
                        help="offset applied to every stream")
    parser.add_argument("--epochs", type=int, default=None, help="override training epochs")
    parser.add_argument("--batch-size", type=int, default=None, help="override batch size")
    parser.add_argument("--noise-std", type=float, default=None,
                        help="override task observation noise")
    parser.add_argument("--out", default=defaults.DEFAULT_OUT_DIR, help="output directory")


def _config_from(args: argparse.Namespace) -> TrainConfig:
    config = defaults.default_train_config()
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    if args.batch_size is not None:
        config = replace(config, batch_size=args.batch_size)
    return config


def _task_from(args: argparse.Namespace) -> TaskSpec:
    spec = defaults.default_task_spec()
    if args.noise_std is not None:
        spec = replace(spec, noise_std=args.noise_std)
    return spec


def _cmd_run(args: argparse.Namespace) -> int:
    graph, weights = load_topology(args.topology)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    records = run_experiment(
        graph,
        weights,
        _task_from(args),
        schemes,
        list(range(args.seeds)),
        rate_weight=args.rate_weight,
        config=_config_from(args),
        master_seed=args.master_seed,
    )
    summaries, headline = summarize(records)
    paths = emit_results(records, summaries, headline, [], args.out)
    header = f"{'scheme':<14}{'edges':>6}{'params':>8}{'Mbit/epoch':>12}{'rate':>16}{'acc %':>16}{'nll':>20}"
    print(header)
    for row in summaries:
        print(
            f"{row.scheme:<14}{row.edges:>6}{row.params:>8}"
            f"{row.bits_per_epoch / 1e6:>12.3f}"
            f"{row.rate_mean:>9.2f}±{row.rate_std:<6.2f}"
            f"{row.accuracy_mean:>9.2f}±{row.accuracy_std:<6.2f}"
            f"{row.nll_mean:>12.4f}±{row.nll_std:<7.4f}"
        )
    for name, value in sorted(headline.items()):
        print(f"{name}: {value:.2f}%")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    graph, weights = load_topology(args.topology)
    grid = [float(x) for x in args.lambda_grid.split(",") if x.strip()]
    points = sweep_lambda(
        graph,
        weights,
        _task_from(args),
        grid,
        list(range(args.seeds)),
        config=_config_from(args),
        master_seed=args.master_seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "frontier.csv"
    write_frontier_csv(points, path)
    print(f"{'rate weight':>12}{'rate':>10}{'nll':>10}{'acc %':>10}")
    for p in points:
        print(f"{p.rate_weight:>12g}{p.rate:>10.2f}{p.nll:>10.4f}{p.accuracy:>10.2f}")
    print(f"wrote {path}")
    return 0


def _cmd_prune(args: argparse.Namespace) -> int:
    graph, weights = load_topology(args.topology)
    dense = full_topology(graph)
    sparse = build_spt(graph, weights)
    dist, _ = reverse_dijkstra(graph, weights)
    on_tree = set(sparse.active)
    print(f"{'edge':<10}{'cost':>10}  on tree")
    for (u, v) in dense.active:
        cost = edge_cost(graph.edges[(u, v)], weights)
        print(f"({u},{v})".ljust(10) + f"{cost:>10.4f}  {'*' if (u, v) in on_tree else ''}")
    print()
    for j in graph.data_nodes:
        print(f"shortest path cost from node {j}: {dist[j]:.4f}")
    ratio = reduction_ratio(sparse, dense)
    q = TaskSpec().train_size
    s = weights.bits_per_scalar
    print()
    print(f"active edges: {len(sparse.active)} of {len(dense.active)}")
    print(f"width ratio: {sparse.total_width()}/{dense.total_width()} = {ratio:.4f}")
    print(f"exchange gain: {100.0 * (1.0 - ratio):.2f}%")
    print(
        f"bits/epoch at {q} samples, {s}-bit scalars: "
        f"{exchange_bits(sparse, s, q)} (pruned) vs {exchange_bits(dense, s, q)} (dense)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dinl",
        description="Shortest-path-tree pruned in-network learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train schemes over seeds and emit results")
    _add_topology_flag(run_p)
    run_p.add_argument("--schemes", default=",".join(defaults.DEFAULT_SCHEMES),
                       help="comma-separated subset of dense,dijkstra,dijkstra+rate")
    run_p.add_argument("--lambda", dest="rate_weight", type=float,
                       default=defaults.DEFAULT_RATE_WEIGHT,
                       help="rate weight for the dijkstra+rate scheme")
    _add_run_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="trace the rate-loss frontier over a rate-weight grid")
    _add_topology_flag(sweep_p)
    sweep_p.add_argument("--lambda-grid",
                         default=",".join(str(x) for x in defaults.DEFAULT_LAMBDA_GRID),
                         help="comma-separated rate weights")
    _add_run_flags(sweep_p)
    sweep_p.set_defaults(func=_cmd_sweep)

    prune_p = sub.add_parser("prune", help="print the pruning of a topology file")
    _add_topology_flag(prune_p)
    prune_p.set_defaults(func=_cmd_prune)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
