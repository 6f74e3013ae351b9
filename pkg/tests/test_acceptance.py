"""Acceptance suite: one test per release criterion, each printing a verdict line.

The expensive artifacts (the full six-seed experiment and the rate-weight
sweep) are built once per module and shared; every criterion checks its
stated tolerance, nothing is loosened at test time.  Run with

    pytest tests/test_acceptance.py -v -s
"""

import math
import time
from itertools import islice, product

import numpy as np
import pytest

from dinl.engine import (
    SensorModule,
    TrainConfig,
    build_modules,
    backward_wave,
    forward_wave,
)
from dinl.graph import build_spt, exchange_bits, full_topology, reduction_ratio
from dinl.harness import emit_results, run_experiment, summarize, sweep_lambda
from dinl.nn import DenseLayer, GaussianGate, bce_with_logits, empirical_mi
from dinl.rng import stream
from dinl.task import TaskSpec
from oracles import (
    enumerate_paths,
    finite_difference,
    latency_graph,
    max_relative_error,
    min_path_cost,
    path_cost,
    random_cost_dag,
)

SEEDS = [0, 1, 2, 3, 4, 5]
RATE_WEIGHT = 0.01
LAMBDA_GRID = [0.0, 1e-3, 1e-2, 1e-1]
REFERENCE_TREE = {(0, 6), (1, 6), (2, 7), (3, 6), (4, 6), (5, 7), (6, 9), (7, 9)}


def _report(criterion: str, ok: bool, detail: str = "") -> None:
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{criterion} failed: {detail}"


@pytest.fixture(scope="module")
def experiment(reference):
    """Full six-seed, three-scheme run with edge-discipline bookkeeping."""
    graph, weights = reference
    discipline = {"steps": 0, "violations": 0}
    epoch_scalars: dict[tuple, dict[int, int]] = {}
    topologies: dict[tuple, object] = {}

    def hook(topology, epoch, step, trace):
        discipline["steps"] += 1
        active = set(topology.active)
        if trace.edge_set("forward") != active or trace.edge_set("backward") != active:
            discipline["violations"] += 1
        if trace.total_scalars("forward") != trace.total_scalars("backward"):
            discipline["violations"] += 1
        topologies[topology.active] = topology
        per_epoch = epoch_scalars.setdefault(topology.active, {})
        per_epoch[epoch] = per_epoch.get(epoch, 0) + trace.total_scalars()

    start = time.perf_counter()
    records = run_experiment(
        graph,
        weights,
        TaskSpec(),
        ["dense", "dijkstra", "dijkstra+rate"],
        SEEDS,
        rate_weight=RATE_WEIGHT,
        trace_hook=hook,
    )
    elapsed = time.perf_counter() - start
    summaries, headline = summarize(records)
    return {
        "graph": graph,
        "weights": weights,
        "records": records,
        "summaries": {row.scheme: row for row in summaries},
        "headline": headline,
        "elapsed": elapsed,
        "discipline": discipline,
        "epoch_scalars": epoch_scalars,
        "topologies": topologies,
    }


@pytest.fixture(scope="module")
def frontier(reference):
    graph, weights = reference
    start = time.perf_counter()
    points = sweep_lambda(graph, weights, TaskSpec(), LAMBDA_GRID, SEEDS)
    return points, time.perf_counter() - start


def test_criterion_1_topology_exactness(reference):
    graph, weights = reference
    build_spt(graph, weights)  # warm
    timings = []
    for _ in range(5):
        t0 = time.perf_counter()
        sparse = build_spt(graph, weights)
        timings.append(time.perf_counter() - t0)
    dense = full_topology(graph)
    ok = set(sparse.active) == REFERENCE_TREE and len(dense.active) == 27
    fast = min(timings) < 1e-3
    _report(
        "criterion 1 (topology exactness)",
        ok and fast,
        f"tree={sorted(sparse.active)} dense_edges={len(dense.active)} "
        f"best_time={min(timings) * 1e6:.0f}us",
    )


def test_criterion_2_exchange_exactness(reference):
    graph, weights = reference
    dense = full_topology(graph)
    sparse = build_spt(graph, weights)
    dense_bits = exchange_bits(dense, 32, 120)
    sparse_bits = exchange_bits(sparse, 32, 120)
    ratio = reduction_ratio(sparse, dense)
    gain = 100.0 * (1.0 - ratio)
    ok = (
        dense_bits == 622_080
        and sparse_bits == 184_320
        and round(dense_bits / 1e6, 3) == 0.622
        and round(sparse_bits / 1e6, 3) == 0.184
        and ratio == 8 / 27
        and abs(gain - 70.4) <= 0.1
    )
    _report(
        "criterion 2 (exchange exactness)",
        ok,
        f"bits={dense_bits}/{sparse_bits} ratio={ratio:.6f} gain={gain:.2f}%",
    )


def test_criterion_3_dijkstra_oracle_equivalence():
    from dinl.graph import reverse_dijkstra

    rng = np.random.default_rng(13)
    start = time.perf_counter()
    graphs = 0
    while graphs < 200:
        graph, weights, costs = random_cost_dag(rng)
        dist, hop = reverse_dijkstra(graph, weights)
        for v in range(graph.num_nodes):
            expected = 0.0 if v == graph.fusion else min_path_cost(costs, costs, v, graph.fusion)
            if math.isinf(expected):
                assert math.isinf(dist[v])
            else:
                assert dist[v] == pytest.approx(expected, rel=1e-12)
        # per-source optimality of the selected paths, and no routing beats them
        selected_costs = []
        paths_per_source = []
        for j in graph.data_nodes:
            path, v = [], j
            while v != graph.fusion:
                path.append((v, hop[v]))
                v = hop[v]
            selected_costs.append(path_cost(path, costs))
            paths_per_source.append(enumerate_paths(costs, j, graph.fusion))
        selected_total = sum(selected_costs)
        for routing in islice(product(*paths_per_source), 100):
            assert selected_total <= sum(path_cost(p, costs) for p in routing) + 1e-9
        graphs += 1
    elapsed = time.perf_counter() - start
    _report(
        "criterion 3 (Dijkstra oracle equivalence)",
        elapsed < 5.0,
        f"{graphs} random DAGs in {elapsed:.2f}s",
    )


def test_criterion_4_gradient_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(17)
    worst = 0.0

    # dense layers over random shapes and activations
    for trial in range(20):
        in_dim, out_dim, batch = (int(rng.integers(1, 5)) for _ in range(3))
        layer = DenseLayer(in_dim, out_dim, ("identity", "tanh", "relu")[trial % 3], rng=rng)
        x = rng.normal(size=(batch, in_dim))
        probe = rng.normal(size=(batch, out_dim))
        expected = finite_difference(lambda: float((layer.forward(x) * probe).sum()),
                                     [layer.w, layer.b])
        layer.forward(x)
        layer.gw[:] = 0.0
        layer.gb[:] = 0.0
        layer.backward(probe)
        worst = max(worst, max_relative_error(layer.gw, expected[0]),
                    max_relative_error(layer.gb, expected[1]))

    # the loss
    logits = rng.normal(size=(6, 1))
    labels = (rng.uniform(size=(6, 1)) > 0.5).astype(float)
    expected = finite_difference(lambda: bce_with_logits(logits, labels)[0], [logits])[0]
    worst = max(worst, max_relative_error(bce_with_logits(logits, labels)[1], expected))

    # the gate with frozen noise, task plus rate term
    mu = rng.normal(size=(3, 2))
    logvar = rng.normal(scale=0.5, size=(3, 2))
    probe = rng.normal(size=(3, 2))

    def gate_objective():
        gate = GaussianGate()
        message, kl = gate.forward(mu, logvar, np.random.default_rng(71))
        return float((message * probe).sum()) + 0.3 * kl

    expected = finite_difference(gate_objective, [mu, logvar])
    gate = GaussianGate()
    gate.forward(mu, logvar, np.random.default_rng(71))
    d_mu, d_logvar = gate.backward(probe, rate_weight=0.3)
    worst = max(worst, max_relative_error(d_mu, expected[0]),
                max_relative_error(d_logvar, expected[1]))

    # a full sensor -> relay -> fusion composition
    from dinl.graph import FUSION, RELAY, SENSOR
    from dinl.engine import Architecture

    graph, _ = latency_graph((SENSOR, RELAY, FUSION), {(0, 1): 1.0, (1, 2): 1.0})
    topology = full_topology(graph)
    arch = Architecture(sensor_hidden=3, relay_hidden=3, fusion_hidden=3)
    config = TrainConfig(scheme="acc-fd", seed=0, rate_weight=0.05)
    modules = build_modules(graph, topology, config, arch)
    obs = rng.normal(size=(4, 1, 2))
    labels = (rng.uniform(size=(4, 1)) > 0.5).astype(float)

    def reset_noise():
        for module in modules.values():
            if isinstance(module, SensorModule):
                module.noise_rng = stream("acc-frozen", module.node)

    def objective():
        reset_noise()
        logits, kls, _ = forward_wave(modules, topology, obs)
        nll, _ = bce_with_logits(logits, labels)
        return nll + config.rate_weight * sum(kls.values())

    params = [p for v in sorted(modules) for layer in modules[v].layers() for p in layer.params()]
    expected = finite_difference(objective, params)
    reset_noise()
    logits, _, trace = forward_wave(modules, topology, obs)
    _, error = bce_with_logits(logits, labels)
    backward_wave(modules, topology, error, trace, rate_weight=config.rate_weight)
    grads = [g for v in sorted(modules) for layer in modules[v].layers() for g in layer.grads()]
    for grad, ref in zip(grads, expected):
        worst = max(worst, max_relative_error(grad, ref))

    elapsed = time.perf_counter() - start
    _report(
        "criterion 4 (gradient suite)",
        worst < 1e-4 and elapsed < 10.0,
        f"worst_rel_err={worst:.2e} in {elapsed:.2f}s",
    )


def test_criterion_5_edge_discipline(experiment):
    weights = experiment["weights"]
    discipline = experiment["discipline"]
    bits_ok = True
    for active, per_epoch in experiment["epoch_scalars"].items():
        topology = experiment["topologies"][active]
        expected = exchange_bits(topology, weights.bits_per_scalar, TaskSpec().train_size)
        for epoch, scalars in per_epoch.items():
            # scalars accumulate across the runs sharing this topology, so the
            # per-epoch bit total must be an exact multiple of the closed form
            if scalars * weights.bits_per_scalar % expected != 0:
                bits_ok = False
    ok = discipline["steps"] > 0 and discipline["violations"] == 0 and bits_ok
    _report(
        "criterion 5 (edge discipline)",
        ok,
        f"steps={discipline['steps']} violations={discipline['violations']} bits_exact={bits_ok}",
    )


def test_criterion_6_experiment_reproduction(experiment):
    rows = experiment["summaries"]
    dense = rows["dense"]
    spt = rows["dijkstra"]
    gated = rows["dijkstra+rate"]
    gap = abs(dense.accuracy_mean - spt.accuracy_mean)
    checks = {
        "dense accuracy in [68, 80]": 68.0 <= dense.accuracy_mean <= 80.0,
        "gap within max(2.0, dense std)": gap <= max(2.0, dense.accuracy_std),
        "rate cut to <= 0.7x": gated.rate_mean <= 0.7 * spt.rate_mean,
        "runtime < 120 s": experiment["elapsed"] < 120.0,
    }
    detail = (
        f"dense={dense.accuracy_mean:.2f}±{dense.accuracy_std:.2f} "
        f"spt={spt.accuracy_mean:.2f} gap={gap:.2f} "
        f"rates {spt.rate_mean:.2f}->{gated.rate_mean:.2f} "
        f"({experiment['elapsed']:.1f}s)"
    )
    _report("criterion 6 (experiment reproduction)", all(checks.values()),
            detail + " " + str({k: v for k, v in checks.items() if not v}))


def test_criterion_7_rate_knob_monotonicity(frontier):
    points, elapsed = frontier
    by_weight = sorted(points, key=lambda p: p.rate_weight)
    rates = [p.rate for p in by_weight]
    monotone = all(a >= b for a, b in zip(rates, rates[1:]))
    _report(
        "criterion 7 (rate-knob monotonicity)",
        monotone and elapsed < 300.0,
        f"rates by weight {[round(r, 3) for r in rates]} in {elapsed:.1f}s",
    )


def test_criterion_8_deterministic_reproduction(reference, experiment, tmp_path):
    graph, weights = reference
    summaries, headline = summarize(experiment["records"])
    first = emit_results(experiment["records"], summaries, headline, [], tmp_path / "a")

    records2 = run_experiment(
        graph, weights, TaskSpec(), ["dense", "dijkstra", "dijkstra+rate"],
        SEEDS, rate_weight=RATE_WEIGHT,
    )
    summaries2, headline2 = summarize(records2)
    second = emit_results(records2, summaries2, headline2, [], tmp_path / "b")

    identical = all(first[k].read_bytes() == second[k].read_bytes() for k in first)
    _report(
        "criterion 8 (byte-identical reruns)",
        identical,
        f"files={sorted(first)}",
    )


def test_criterion_9_information_identities():
    gate = GaussianGate()
    _, kl_zero = gate.forward(np.zeros((1, 1)), np.zeros((1, 1)), stochastic=False)
    _, kl_half = gate.forward(np.array([[1.0]]), np.array([[0.0]]), stochastic=False)
    mi_flat = empirical_mi(np.full((2, 2), 3.0))
    mi_diag = empirical_mi(np.eye(2))
    ok = (
        abs(kl_zero) <= 1e-12
        and abs(kl_half - 0.5) <= 1e-12
        and abs(mi_flat) <= 1e-12
        and abs(mi_diag - math.log(2.0)) <= 1e-12
    )
    _report(
        "criterion 9 (information identities)",
        ok,
        f"kl0={kl_zero:.2e} kl_half={kl_half} mi_flat={mi_flat:.2e} mi_diag={mi_diag:.12f}",
    )
