"""Distributed training engine: node modules wired onto an active topology.

The forward wave pushes latent messages from sensors toward the fusion node
in topological order; the backward wave returns error vectors along the same
edges in reverse.  Messages travel only on active edges, so pruning an edge
removes both transmissions, and every send is recorded in a trace whose
totals reconcile exactly with the closed-form per-epoch exchange.

One engine run owns its modules exclusively (single writer); independent
runs are safe to execute in parallel because all random streams are keyed
by (scheme, seed, node).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import FUSION, RELAY, SENSOR, Edge, NetworkGraph, TrainingTopology, exchange_bits
from .nn import Adam, DenseLayer, GaussianGate, bce_with_logits
from .rng import stream


class EngineError(RuntimeError):
    """A training run hit an inconsistent or non-finite state."""


@dataclass(frozen=True)
class Architecture:
    """Layer sizes of the node modules; message width must match edge widths."""

    sensor_input: int = 2
    sensor_hidden: int = 16
    message_dim: int = 3
    relay_hidden: int = 8
    fusion_hidden: int = 16


@dataclass(frozen=True)
class TrainConfig:
    """One training run: optimization settings plus stream identity.

    ``rate_weight`` scales the KL rate penalty of the sensor gates; the
    bandwidth side of the objective is structural (fixed by the topology
    choice), so it never appears as a differentiable term.  ``scheme`` only
    labels the random streams so concurrent runs stay independent.
    """

    epochs: int = 150
    batch_size: int = 32
    rate_weight: float = 0.0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    scheme: str = "run"
    eval_every: int = 25
    bits_per_scalar: int = 32

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.rate_weight < 0:
            raise ValueError(f"rate_weight must be >= 0, got {self.rate_weight}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")


@dataclass
class WaveTrace:
    """Transmission log of one batch: (edge, direction, scalar count) entries."""

    entries: list[tuple[Edge, str, int]] = field(default_factory=list)

    def record(self, edge: Edge, direction: str, scalars: int) -> None:
        self.entries.append((edge, direction, scalars))

    def total_scalars(self, direction: str | None = None) -> int:
        return sum(s for _, d, s in self.entries if direction in (None, d))

    def edge_set(self, direction: str | None = None) -> set[Edge]:
        return {e for e, d, _ in self.entries if direction in (None, d)}


class SensorModule:
    """Observation encoder with a Gaussian gate on its outgoing message."""

    role = SENSOR

    def __init__(
        self,
        node: int,
        arch: Architecture,
        init_rng: np.random.Generator,
        noise_rng: np.random.Generator,
    ):
        self.node = node
        self.output_dim = arch.message_dim
        self.encoder = DenseLayer(arch.sensor_input, arch.sensor_hidden, "tanh", rng=init_rng)
        self.mu_head = DenseLayer(arch.sensor_hidden, arch.message_dim, rng=init_rng)
        self.logvar_head = DenseLayer(arch.sensor_hidden, arch.message_dim, rng=init_rng)
        self.gate = GaussianGate()
        self.noise_rng = noise_rng

    def forward(self, x: np.ndarray, stochastic: bool = True) -> tuple[np.ndarray, float]:
        h = self.encoder.forward(x)
        mu = self.mu_head.forward(h)
        logvar = self.logvar_head.forward(h)
        return self.gate.forward(mu, logvar, self.noise_rng, stochastic)

    def backward(self, err: np.ndarray, rate_weight: float = 0.0) -> None:
        d_mu, d_logvar = self.gate.backward(err, rate_weight)
        d_hidden = self.mu_head.backward(d_mu) + self.logvar_head.backward(d_logvar)
        self.encoder.backward(d_hidden)

    def layers(self) -> list[DenseLayer]:
        return [self.encoder, self.mu_head, self.logvar_head]


class RelayModule:
    """Mean-aggregates incoming messages and re-encodes to the message width.

    Mean aggregation keeps the parameter count independent of how many
    parents the relay happens to have in the active topology.
    """

    role = RELAY

    def __init__(self, node: int, arch: Architecture, init_rng: np.random.Generator):
        self.node = node
        self.output_dim = arch.message_dim
        self.pre = DenseLayer(arch.message_dim, arch.relay_hidden, "tanh", rng=init_rng)
        self.post = DenseLayer(arch.relay_hidden, arch.message_dim, rng=init_rng)
        self._n_inputs: int | None = None

    def forward(self, inputs: list[np.ndarray]) -> np.ndarray:
        if not inputs:
            raise EngineError(f"relay {self.node} has no active parents")
        self._n_inputs = len(inputs)
        aggregate = np.mean(np.stack(inputs, axis=0), axis=0)
        return self.post.forward(self.pre.forward(aggregate))

    def backward(self, err: np.ndarray) -> list[np.ndarray]:
        if self._n_inputs is None:
            raise EngineError(f"relay {self.node}: backward before forward")
        d_aggregate = self.pre.backward(self.post.backward(err))
        share = d_aggregate / self._n_inputs
        return [share] * self._n_inputs

    def layers(self) -> list[DenseLayer]:
        return [self.pre, self.post]


class FusionModule:
    """Concatenates active-parent messages and emits one classification logit."""

    role = FUSION

    def __init__(self, node: int, n_parents: int, arch: Architecture, init_rng: np.random.Generator):
        if n_parents < 1:
            raise EngineError("fusion node has no active parents")
        self.node = node
        self.message_dim = arch.message_dim
        self.n_parents = n_parents
        self.hidden = DenseLayer(arch.message_dim * n_parents, arch.fusion_hidden, "tanh", rng=init_rng)
        self.out = DenseLayer(arch.fusion_hidden, 1, rng=init_rng)

    def forward(self, inputs: list[np.ndarray]) -> np.ndarray:
        if len(inputs) != self.n_parents:
            raise EngineError(
                f"fusion expected {self.n_parents} parent messages, got {len(inputs)}"
            )
        return self.out.forward(self.hidden.forward(np.concatenate(inputs, axis=1)))

    def backward(self, err: np.ndarray) -> list[np.ndarray]:
        d_input = self.hidden.backward(self.out.backward(err))
        return [
            d_input[:, i * self.message_dim : (i + 1) * self.message_dim]
            for i in range(self.n_parents)
        ]

    def layers(self) -> list[DenseLayer]:
        return [self.hidden, self.out]


Module = SensorModule | RelayModule | FusionModule


def build_modules(
    graph: NetworkGraph,
    topology: TrainingTopology,
    config: TrainConfig,
    arch: Architecture | None = None,
) -> dict[int, Module]:
    """Construct one module per node that participates in the active topology.

    Relays outside the active edge set get no module (and no parameters);
    the fusion input width is fixed by its active parent count, which is why
    pruned and dense runs have different totals.
    """
    arch = arch or Architecture()
    topology.validate()
    for (u, v) in topology.active:
        if graph.roles[v] == SENSOR:
            raise EngineError(f"active edge ({u}, {v}) feeds a sensor; sensors only read local data")
        if graph.edges[(u, v)].width != arch.message_dim:
            raise EngineError(
                f"edge ({u}, {v}) width {graph.edges[(u, v)].width} "
                f"!= architecture message width {arch.message_dim}"
            )
    modules: dict[int, Module] = {}
    for v in topology.active_nodes():
        init_rng = stream("init", config.scheme, config.seed, v)
        role = graph.roles[v]
        if role == SENSOR:
            noise_rng = stream("noise", config.scheme, config.seed, v)
            modules[v] = SensorModule(v, arch, init_rng, noise_rng)
        elif role == RELAY:
            modules[v] = RelayModule(v, arch, init_rng)
        else:
            modules[v] = FusionModule(v, len(topology.parents(v)), arch, init_rng)
    return modules


def _sensor_slots(graph: NetworkGraph) -> dict[int, int]:
    return {j: slot for slot, j in enumerate(graph.data_nodes)}


def forward_wave(
    modules: dict[int, Module],
    topology: TrainingTopology,
    observations: np.ndarray,
    stochastic: bool = True,
) -> tuple[np.ndarray, dict[int, float], WaveTrace]:
    """Evaluate the active subgraph on one batch, logging every transmission.

    ``observations`` has shape (batch, data nodes, input dim), indexed by the
    graph's data nodes in ascending order.  Returns the fusion logits, the
    per-sensor mean KL rate, and the trace with one forward entry per active
    edge.
    """
    graph = topology.graph
    slots = _sensor_slots(graph)
    batch = observations.shape[0]
    trace = WaveTrace()
    messages: dict[int, np.ndarray] = {}
    logits: np.ndarray | None = None
    kls: dict[int, float] = {}
    for v in topology.topological_order():
        module = modules.get(v)
        if module is None:
            raise EngineError(f"no module for active node {v}")
        role = graph.roles[v]
        if role == SENSOR:
            out, kl = module.forward(observations[:, slots[v], :], stochastic)
            kls[v] = kl
        elif role == RELAY:
            out = module.forward([messages[p] for p in topology.parents(v)])
        else:
            logits = module.forward([messages[p] for p in topology.parents(v)])
            continue
        messages[v] = out
        for c in topology.children(v):
            trace.record((v, c), "forward", batch * graph.edges[(v, c)].width)
    if logits is None:
        raise EngineError("topology has no fusion node in its active set")
    return logits, kls, trace


def backward_wave(
    modules: dict[int, Module],
    topology: TrainingTopology,
    fusion_error: np.ndarray,
    trace: WaveTrace,
    rate_weight: float = 0.0,
) -> None:
    """Propagate error vectors to every module, strictly over active edges.

    Mirrors the forward wave: each active edge carries exactly one backward
    message per sample (zeros included; traffic does not depend on values).
    Parameter gradients accumulate inside the modules.
    """
    graph = topology.graph
    batch = fusion_error.shape[0]
    errors: dict[int, np.ndarray] = {}

    def _receive(parent: int, child: int, err: np.ndarray) -> None:
        trace.record((parent, child), "backward", batch * graph.edges[(parent, child)].width)
        if parent in errors:
            errors[parent] = errors[parent] + err
        else:
            errors[parent] = err

    for v in reversed(topology.topological_order()):
        module = modules[v]
        role = graph.roles[v]
        if role == FUSION:
            chunks = module.backward(fusion_error)
            for parent, chunk in zip(topology.parents(v), chunks):
                _receive(parent, v, chunk)
        else:
            err = errors.get(v)
            if err is None:
                # active node whose message feeds nothing: no error arrives
                err = np.zeros((batch, module.output_dim))
            if role == RELAY:
                shares = module.backward(err)
                for parent, share in zip(topology.parents(v), shares):
                    _receive(parent, v, share)
            else:
                module.backward(err, rate_weight)


def count_params(modules: dict[int, Module], topology: TrainingTopology) -> int:
    """Trainable scalars across all modules that the topology can reach."""
    return sum(
        layer.param_count()
        for v in topology.active_nodes()
        for layer in modules[v].layers()
    )


@dataclass(frozen=True)
class EvalResult:
    """Deterministic-gate metrics on one dataset split."""

    accuracy: float  # percent of correct sign predictions
    nll: float       # mean binary cross-entropy, nats
    rate: float      # mean per-sample KL over gated sensors, nats


def evaluate(
    modules: dict[int, Module], topology: TrainingTopology, dataset
) -> EvalResult:
    """Score a dataset with deterministic gates (messages carry the means)."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    logits, kls, _ = forward_wave(modules, topology, dataset.observations, stochastic=False)
    nll, _ = bce_with_logits(logits, dataset.labels)
    predictions = (logits > 0).astype(np.float64)
    accuracy = float((predictions == dataset.labels).mean() * 100.0)
    return EvalResult(accuracy=accuracy, nll=nll, rate=float(sum(kls.values())))


TraceHook = Callable[[int, int, WaveTrace], None]


def train(
    modules: dict[int, Module],
    topology: TrainingTopology,
    train_set,
    config: TrainConfig,
    val_set=None,
    trace_hook: TraceHook | None = None,
) -> list[dict]:
    """Mini-batch optimization of mean NLL plus the weighted gate rate.

    Returns one metrics dict per epoch (training NLL and rate, cumulative
    bits exchanged, validation metrics at the evaluation cadence).  The
    per-epoch bit total is reconciled against the closed-form exchange count
    and any mismatch aborts the run: bit accounting is load-bearing here.
    """
    config.validate()
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    ordered = sorted(modules)
    params = [p for v in ordered for layer in modules[v].layers() for p in layer.params()]
    grads = [g for v in ordered for layer in modules[v].layers() for g in layer.grads()]
    optimizer = Adam(
        params,
        grads,
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.adam_eps,
    )
    shuffle_rng = stream("shuffle", config.scheme, config.seed)
    n = len(train_set)
    expected_epoch_bits = exchange_bits(topology, config.bits_per_scalar, n)
    cumulative_bits = 0
    history: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        epoch_scalars = 0
        nll_weighted = 0.0
        kl_weighted = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start : start + config.batch_size]
            obs = train_set.observations[idx]
            labels = train_set.labels[idx]
            logits, kls, trace = forward_wave(modules, topology, obs, stochastic=True)
            nll, error = bce_with_logits(logits, labels)
            kl_total = sum(kls.values())
            objective = nll + config.rate_weight * kl_total
            if not math.isfinite(objective):
                raise EngineError(
                    f"non-finite objective at epoch {epoch} step {step}: "
                    f"nll={nll}, rate={kl_total}"
                )
            backward_wave(modules, topology, error, trace, config.rate_weight)
            optimizer.step()
            epoch_scalars += trace.total_scalars()
            nll_weighted += nll * len(idx)
            kl_weighted += kl_total * len(idx)
            if trace_hook is not None:
                trace_hook(epoch, step, trace)
        epoch_bits = config.bits_per_scalar * epoch_scalars
        if epoch_bits != expected_epoch_bits:
            raise EngineError(
                f"epoch {epoch} exchanged {epoch_bits} bits, expected {expected_epoch_bits}"
            )
        cumulative_bits += epoch_bits
        entry = {
            "epoch": epoch,
            "train_nll": nll_weighted / n,
            "train_rate": kl_weighted / n,
            "cumulative_bits": cumulative_bits,
        }
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            result = evaluate(modules, topology, train_set)
            entry["train_accuracy"] = result.accuracy
            if val_set is not None:
                result = evaluate(modules, topology, val_set)
                entry["val_accuracy"] = result.accuracy
                entry["val_nll"] = result.nll
                entry["val_rate"] = result.rate
        history.append(entry)
    return history
