"""Experiment driver: scheme-by-seed runs, summary statistics, and CSV emission.

Three schemes are compared on the same seeded datasets: ``dense`` trains on
every training-active edge, ``dijkstra`` on the capacity-aware shortest-path
tree, and ``dijkstra+rate`` on the same tree with a positive KL rate weight
on the sensor gates.  Structural numbers (edges, parameters, bits per epoch)
are exact and seed-independent; stochastic metrics are aggregated as
mean +/- standard deviation over seeds.

All aggregation is a deterministic fold over records sorted by
(scheme, seed), so fanning runs out to workers could never change a byte of
the emitted CSVs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .engine import (
    Architecture,
    TrainConfig,
    WaveTrace,
    build_modules,
    count_params,
    evaluate,
    train,
)
from .graph import (
    CostWeights,
    NetworkGraph,
    TrainingTopology,
    build_spt,
    exchange_bits,
    full_topology,
)
from .task import Dataset, TaskSpec, generate

SCHEMES = ("dense", "dijkstra", "dijkstra+rate")

RunHook = Callable[[TrainingTopology, int, int, WaveTrace], None]


@dataclass(frozen=True)
class ExperimentRecord:
    """Test-split outcome of one (scheme, seed) training run."""

    scheme: str
    seed: int
    edges: int
    params: int
    bits_per_epoch: int
    rate: float
    accuracy: float
    nll: float


@dataclass(frozen=True)
class SummaryRow:
    """Per-scheme aggregate over seeds; structural fields are exact."""

    scheme: str
    edges: int
    params: int
    bits_per_epoch: int
    rate_mean: float
    rate_std: float
    accuracy_mean: float
    accuracy_std: float
    nll_mean: float
    nll_std: float


@dataclass(frozen=True)
class FrontierPoint:
    """Seed-averaged operating point of one rate weight on the pruned tree."""

    rate_weight: float
    rate: float
    nll: float
    accuracy: float
    bits_per_epoch: int


def _topology_for(scheme: str, graph: NetworkGraph, weights: CostWeights) -> TrainingTopology:
    if scheme == "dense":
        return full_topology(graph)
    return build_spt(graph, weights)


def _datasets(task_spec: TaskSpec, seeds: Iterable[int]) -> dict[int, tuple[Dataset, Dataset, Dataset]]:
    return {seed: generate(replace(task_spec, seed=seed)) for seed in seeds}


def _single_run(
    graph: NetworkGraph,
    topology: TrainingTopology,
    splits: tuple[Dataset, Dataset, Dataset],
    scheme: str,
    seed: int,
    rate_weight: float,
    config: TrainConfig,
    bits_per_scalar: int,
    arch: Architecture | None,
    trace_hook: RunHook | None,
):
    run_config = replace(
        config,
        seed=seed,
        scheme=scheme,
        rate_weight=rate_weight,
        bits_per_scalar=bits_per_scalar,
    )
    train_set, val_set, test_set = splits
    modules = build_modules(graph, topology, run_config, arch)
    hook = None
    if trace_hook is not None:
        hook = lambda epoch, step, trace: trace_hook(topology, epoch, step, trace)
    train(modules, topology, train_set, run_config, val_set=val_set, trace_hook=hook)
    result = evaluate(modules, topology, test_set)
    return modules, result, len(train_set)


def run_experiment(
    graph: NetworkGraph,
    weights: CostWeights,
    task_spec: TaskSpec,
    schemes: Sequence[str],
    seeds: Sequence[int],
    *,
    rate_weight: float,
    config: TrainConfig | None = None,
    master_seed: int = 0,
    arch: Architecture | None = None,
    trace_hook: RunHook | None = None,
) -> list[ExperimentRecord]:
    """Train and score one record per (scheme, seed); nothing partial on failure.

    The master seed offsets every stream, so two calls with the same master
    seed are bit-identical and different master seeds give fresh replicas.
    ``rate_weight`` applies to the ``dijkstra+rate`` scheme only.
    """
    unknown = [s for s in schemes if s not in SCHEMES]
    if unknown:
        raise ValueError(f"unknown scheme(s) {unknown}; choose from {SCHEMES}")
    if rate_weight < 0:
        raise ValueError(f"rate_weight must be >= 0, got {rate_weight}")
    config = config or TrainConfig()
    eff_seeds = [master_seed + s for s in seeds]
    datasets = _datasets(task_spec, eff_seeds)
    records = []
    for scheme in schemes:
        topology = _topology_for(scheme, graph, weights)
        lam = rate_weight if scheme == "dijkstra+rate" else 0.0
        for seed in eff_seeds:
            modules, result, train_size = _single_run(
                graph,
                topology,
                datasets[seed],
                scheme,
                seed,
                lam,
                config,
                weights.bits_per_scalar,
                arch,
                trace_hook,
            )
            records.append(
                ExperimentRecord(
                    scheme=scheme,
                    seed=seed,
                    edges=len(topology.active),
                    params=count_params(modules, topology),
                    bits_per_epoch=exchange_bits(topology, weights.bits_per_scalar, train_size),
                    rate=result.rate,
                    accuracy=result.accuracy,
                    nll=result.nll,
                )
            )
    return sorted(records, key=lambda r: (r.scheme, r.seed))


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def summarize(records: Sequence[ExperimentRecord]) -> tuple[list[SummaryRow], dict[str, float]]:
    """Aggregate records per scheme and derive the headline reductions.

    Headline numbers: the exchange reduction (percent of dense bits saved by
    the pruned tree) and the rate reduction (percent of the unregularized
    tree's KL rate removed by the rate penalty), each present only when both
    operands are.
    """
    if not records:
        raise ValueError("no records to summarize")
    rows = []
    by_scheme: dict[str, list[ExperimentRecord]] = {}
    for record in records:
        by_scheme.setdefault(record.scheme, []).append(record)
    for scheme in SCHEMES:
        if scheme not in by_scheme:
            continue
        group = by_scheme[scheme]
        for name in ("edges", "params", "bits_per_epoch"):
            distinct = {getattr(r, name) for r in group}
            if len(distinct) != 1:
                raise ValueError(f"{scheme}: {name} differs across seeds: {sorted(distinct)}")
        rate_mean, rate_std = _mean_std([r.rate for r in group])
        acc_mean, acc_std = _mean_std([r.accuracy for r in group])
        nll_mean, nll_std = _mean_std([r.nll for r in group])
        rows.append(
            SummaryRow(
                scheme=scheme,
                edges=group[0].edges,
                params=group[0].params,
                bits_per_epoch=group[0].bits_per_epoch,
                rate_mean=rate_mean,
                rate_std=rate_std,
                accuracy_mean=acc_mean,
                accuracy_std=acc_std,
                nll_mean=nll_mean,
                nll_std=nll_std,
            )
        )

    headline: dict[str, float] = {}
    by_name = {row.scheme: row for row in rows}
    sparse = by_name.get("dijkstra") or by_name.get("dijkstra+rate")
    if "dense" in by_name and sparse is not None:
        headline["exchange_reduction_pct"] = 100.0 * (
            1.0 - sparse.bits_per_epoch / by_name["dense"].bits_per_epoch
        )
    if "dijkstra" in by_name and "dijkstra+rate" in by_name:
        base = by_name["dijkstra"].rate_mean
        headline["rate_reduction_pct"] = 100.0 * (
            (base - by_name["dijkstra+rate"].rate_mean) / base
        )
    return rows, headline


def sweep_lambda(
    graph: NetworkGraph,
    weights: CostWeights,
    task_spec: TaskSpec,
    lambda_grid: Sequence[float],
    seeds: Sequence[int],
    *,
    config: TrainConfig | None = None,
    master_seed: int = 0,
    arch: Architecture | None = None,
) -> list[FrontierPoint]:
    """Trace the empirical rate-loss frontier of the pruned tree.

    Each grid value trains the shortest-path-tree model over all seeds and
    reports seed-averaged test metrics, sorted by achieved rate.  A zero
    rate weight reproduces the unregularized pruned runs exactly.
    """
    if len(lambda_grid) == 0:
        raise ValueError("lambda grid is empty")
    if any(lam < 0 for lam in lambda_grid):
        raise ValueError("rate weights must be >= 0")
    config = config or TrainConfig()
    topology = build_spt(graph, weights)
    eff_seeds = [master_seed + s for s in seeds]
    datasets = _datasets(task_spec, eff_seeds)
    points = []
    for lam in lambda_grid:
        scheme = "dijkstra" if lam == 0 else "dijkstra+rate"
        results = []
        train_size = None
        for seed in eff_seeds:
            _, result, train_size = _single_run(
                graph, topology, datasets[seed], scheme, seed, lam,
                config, weights.bits_per_scalar, arch, None,
            )
            results.append(result)
        points.append(
            FrontierPoint(
                rate_weight=lam,
                rate=float(np.mean([r.rate for r in results])),
                nll=float(np.mean([r.nll for r in results])),
                accuracy=float(np.mean([r.accuracy for r in results])),
                bits_per_epoch=exchange_bits(topology, weights.bits_per_scalar, train_size),
            )
        )
    return sorted(points, key=lambda p: p.rate)


RECORD_FIELDS = ("scheme", "seed", "edges", "params", "bits_per_epoch", "rate", "accuracy", "nll")
SUMMARY_FIELDS = ("scheme", "edges", "params", "mbit_per_epoch", "rate", "acc", "nll")
FRONTIER_FIELDS = ("rate_weight", "rate", "nll", "accuracy", "bits_per_epoch")


def write_records_csv(records: Sequence[ExperimentRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow(
                [r.scheme, r.seed, r.edges, r.params, r.bits_per_epoch,
                 repr(r.rate), repr(r.accuracy), repr(r.nll)]
            )


def load_records(path: str | Path) -> list[ExperimentRecord]:
    """Exact inverse of ``write_records_csv``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RECORD_FIELDS:
        raise ValueError(f"{path}: not a records CSV")
    return [
        ExperimentRecord(
            scheme=row[0],
            seed=int(row[1]),
            edges=int(row[2]),
            params=int(row[3]),
            bits_per_epoch=int(row[4]),
            rate=float(row[5]),
            accuracy=float(row[6]),
            nll=float(row[7]),
        )
        for row in rows[1:]
    ]


def write_summary_csv(rows: Sequence[SummaryRow], path: Path) -> None:
    """Summary table with one row per scheme, stochastic cells as ``mean±std``.

    Full ``repr`` precision is kept inside the cells, so the statistics can
    be recovered exactly by splitting on the separator.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for row in rows:
            writer.writerow(
                [
                    row.scheme,
                    row.edges,
                    row.params,
                    repr(row.bits_per_epoch / 1e6),
                    f"{row.rate_mean!r}±{row.rate_std!r}",
                    f"{row.accuracy_mean!r}±{row.accuracy_std!r}",
                    f"{row.nll_mean!r}±{row.nll_std!r}",
                ]
            )


def write_frontier_csv(points: Sequence[FrontierPoint], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FRONTIER_FIELDS)
        for p in points:
            writer.writerow(
                [repr(p.rate_weight), repr(p.rate), repr(p.nll), repr(p.accuracy), p.bits_per_epoch]
            )


def emit_results(
    records: Sequence[ExperimentRecord],
    summaries: Sequence[SummaryRow],
    headline: dict[str, float],
    frontier: Sequence[FrontierPoint],
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write records.csv, summary.csv, frontier.csv, and headline.json.

    Deterministic byte-for-byte given the same inputs; empty sequences yield
    header-only CSVs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out / "records.csv",
        "summary": out / "summary.csv",
        "frontier": out / "frontier.csv",
        "headline": out / "headline.json",
    }
    write_records_csv(records, paths["records"])
    write_summary_csv(summaries, paths["summary"])
    write_frontier_csv(frontier, paths["frontier"])
    with open(paths["headline"], "w") as fh:
        json.dump(headline, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
