"""Communication-graph model: candidate DAG, edge costs, and shortest-path pruning.

A candidate network is a directed acyclic graph whose nodes host a sensor
(data source), a relay, or the single fusion sink.  Training traffic flows
only on a chosen subset of edges (the "training topology"): forward
activations toward the fusion node and backward error vectors away from it,
so dropping an edge removes real transmissions in both directions.

This module builds the two topologies the simulator compares, the full set
of training-active edges and the capacity-aware shortest-path tree, and does
the exact bit accounting for both.  All objects here are immutable after
construction; every function is pure and safe to call concurrently.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

SENSOR = "sensor"
RELAY = "relay"
FUSION = "fusion"
ROLES = (SENSOR, RELAY, FUSION)

Edge = tuple[int, int]


class GraphSpecError(ValueError):
    """A topology file or graph violates a structural invariant."""


@dataclass(frozen=True)
class EdgeAttr:
    """Static link attributes used for edge cost and bit accounting.

    ``capacity`` is an available rate in abstract units, ``latency`` a delay
    in time units, ``reliability`` a delivery probability, and ``width`` the
    number of real scalars carried per message on this link.
    """

    capacity: float
    latency: float = 0.0
    reliability: float = 1.0
    width: int = 3

    def validate(self) -> None:
        if not self.capacity > 0:
            raise GraphSpecError(f"capacity must be > 0, got {self.capacity}")
        if self.latency < 0:
            raise GraphSpecError(f"latency must be >= 0, got {self.latency}")
        if not 0.0 <= self.reliability <= 1.0:
            raise GraphSpecError(
                f"reliability must be in [0, 1], got {self.reliability}"
            )
        if not (isinstance(self.width, int) and self.width >= 1):
            raise GraphSpecError(f"width must be an integer >= 1, got {self.width}")


@dataclass(frozen=True)
class CostWeights:
    """Weights of the additive per-edge routing cost.

    The cost of an edge is
    ``alpha * bits_per_scalar * width / (capacity + epsilon)
    + beta * latency + gamma * (1 - reliability)``;
    ``epsilon`` only guards against a vanishing capacity.
    """

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    epsilon: float = 1e-9
    bits_per_scalar: int = 32

    def validate(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise GraphSpecError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.epsilon > 0:
            raise GraphSpecError(f"epsilon must be > 0, got {self.epsilon}")
        if not (isinstance(self.bits_per_scalar, int) and self.bits_per_scalar >= 1):
            raise GraphSpecError(
                f"bits_per_scalar must be an integer >= 1, got {self.bits_per_scalar}"
            )


def edge_cost(attr: EdgeAttr, weights: CostWeights) -> float:
    """Additive routing cost of one directed edge; nonnegative for valid inputs."""
    bandwidth_term = (
        weights.alpha
        * weights.bits_per_scalar
        * attr.width
        / (attr.capacity + weights.epsilon)
    )
    return (
        bandwidth_term
        + weights.beta * attr.latency
        + weights.gamma * (1.0 - attr.reliability)
    )


@dataclass(frozen=True)
class NetworkGraph:
    """Directed acyclic candidate graph with per-edge link attributes.

    ``roles[i]`` is the role of node ``i``; ``edges`` maps directed node
    pairs to their attributes.  Exactly one node is the fusion sink and
    every sensor must have a directed path to it.  Treat instances as
    immutable: nothing in this package mutates a graph after construction.
    """

    roles: tuple[str, ...]
    edges: dict[Edge, EdgeAttr]

    @property
    def num_nodes(self) -> int:
        return len(self.roles)

    @property
    def fusion(self) -> int:
        return self.roles.index(FUSION)

    @property
    def data_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, role in enumerate(self.roles) if role == SENSOR)

    def out_edges(self, u: int) -> list[Edge]:
        return [e for e in self.edges if e[0] == u]

    def validate(self) -> None:
        """Check the structural invariants, raising ``GraphSpecError`` on failure."""
        for role in self.roles:
            if role not in ROLES:
                raise GraphSpecError(f"unknown node role {role!r}")
        n_fusion = sum(1 for r in self.roles if r == FUSION)
        if n_fusion != 1:
            raise GraphSpecError(f"expected exactly one fusion node, found {n_fusion}")
        for (u, v), attr in self.edges.items():
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise GraphSpecError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise GraphSpecError(f"self-loop on node {u}")
            attr.validate()
        if self._has_cycle():
            raise GraphSpecError("graph has a directed cycle")
        reach = self._reaches_fusion()
        bad = [j for j in self.data_nodes if not reach[j]]
        if bad:
            raise GraphSpecError(
                f"data node(s) {bad} have no directed path to the fusion node"
            )

    def _has_cycle(self) -> bool:
        indeg = [0] * self.num_nodes
        for _, v in self.edges:
            indeg[v] += 1
        ready = [i for i in range(self.num_nodes) if indeg[i] == 0]
        seen = 0
        while ready:
            u = ready.pop()
            seen += 1
            for (_, v) in self.out_edges(u):
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        return seen != self.num_nodes

    def _reaches_fusion(self) -> list[bool]:
        # reverse breadth-first scan from the fusion node
        incoming: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for (u, v) in self.edges:
            incoming[v].append(u)
        reach = [False] * self.num_nodes
        frontier = [self.fusion]
        reach[self.fusion] = True
        while frontier:
            v = frontier.pop()
            for u in incoming[v]:
                if not reach[u]:
                    reach[u] = True
                    frontier.append(u)
        return reach


@dataclass(frozen=True)
class TrainingTopology:
    """An active edge subset of a candidate graph, with adjacency for the waves.

    Every data node keeps a directed path to the fusion node inside the
    active set.  Parent/child adjacency and the evaluation order are
    precomputed once; instances are immutable.
    """

    graph: NetworkGraph
    active: tuple[Edge, ...]
    _parents: dict[int, tuple[int, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _children: dict[int, tuple[int, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "active", tuple(sorted(self.active)))
        parents: dict[int, list[int]] = {}
        children: dict[int, list[int]] = {}
        for (u, v) in self.active:
            if (u, v) not in self.graph.edges:
                raise GraphSpecError(f"active edge ({u}, {v}) is not in the graph")
            parents.setdefault(v, []).append(u)
            children.setdefault(u, []).append(v)
        object.__setattr__(
            self, "_parents", {v: tuple(sorted(us)) for v, us in parents.items()}
        )
        object.__setattr__(
            self, "_children", {u: tuple(sorted(vs)) for u, vs in children.items()}
        )

    def parents(self, v: int) -> tuple[int, ...]:
        return self._parents.get(v, ())

    def children(self, u: int) -> tuple[int, ...]:
        return self._children.get(u, ())

    def active_nodes(self) -> tuple[int, ...]:
        """Nodes incident to at least one active edge, in index order."""
        nodes = set()
        for (u, v) in self.active:
            nodes.add(u)
            nodes.add(v)
        return tuple(sorted(nodes))

    def total_width(self) -> int:
        return sum(self.graph.edges[e].width for e in self.active)

    def topological_order(self) -> tuple[int, ...]:
        """Evaluation order over active nodes; ties broken by node index."""
        nodes = self.active_nodes()
        indeg = {v: len(self.parents(v)) for v in nodes}
        ready = sorted(v for v in nodes if indeg[v] == 0)
        order: list[int] = []
        while ready:
            u = ready.pop(0)
            order.append(u)
            for v in self.children(u):
                indeg[v] -= 1
                if indeg[v] == 0:
                    # keep the ready list sorted for a deterministic order
                    ready.append(v)
                    ready.sort()
        return tuple(order)

    def validate(self) -> None:
        """Every data node must keep an active directed path to the fusion node."""
        r = self.graph.fusion
        reach = {r}
        frontier = [r]
        while frontier:
            v = frontier.pop()
            for u in self.parents(v):
                if u not in reach:
                    reach.add(u)
                    frontier.append(u)
        bad = [j for j in self.graph.data_nodes if j not in reach]
        if bad:
            raise GraphSpecError(
                f"data node(s) {bad} have no active path to the fusion node"
            )


def reverse_dijkstra(
    graph: NetworkGraph, weights: CostWeights
) -> tuple[list[float], list[int | None]]:
    """Minimum additive cost from every node to the fusion sink.

    Runs Dijkstra on the reverse graph rooted at the fusion node, so one pass
    yields for each node ``v`` the cheapest directed ``v -> fusion`` path cost
    and the first hop of that path.  Unreachable nodes get an infinite
    distance and no hop; an unreachable *data* node is an error because the
    pruned topology could not carry its observations.

    Ties between equal-cost first hops resolve to the lower node index, which
    keeps the resulting trees reproducible across runs.
    """
    n = graph.num_nodes
    root = graph.fusion
    # reverse adjacency: for original (u, v), from v we can step back to u
    back: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (u, v), attr in graph.edges.items():
        cost = edge_cost(attr, weights)
        if cost < 0 or math.isnan(cost):
            raise GraphSpecError(f"edge ({u}, {v}) has invalid cost {cost}")
        back[v].append((u, cost))

    dist = [math.inf] * n
    next_hop: list[int | None] = [None] * n
    dist[root] = 0.0
    done = [False] * n
    heap: list[tuple[float, int]] = [(0.0, root)]
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for (u, cost) in back[x]:
            cand = cost + dist[x]
            if cand < dist[u]:
                dist[u] = cand
                next_hop[u] = x
                heapq.heappush(heap, (cand, u))
            elif cand == dist[u] and next_hop[u] is not None and x < next_hop[u]:
                next_hop[u] = x

    unreachable = [j for j in graph.data_nodes if math.isinf(dist[j])]
    if unreachable:
        raise GraphSpecError(
            f"data node(s) {unreachable} cannot reach the fusion node"
        )
    return dist, next_hop


def build_spt(graph: NetworkGraph, weights: CostWeights) -> TrainingTopology:
    """Union of minimum-cost paths from every data node to the fusion node.

    The sum of the selected per-source path costs equals the sum of the
    shortest-path distances, so no feasible single-path routing does better.
    """
    _, next_hop = reverse_dijkstra(graph, weights)
    active: set[Edge] = set()
    for j in graph.data_nodes:
        v = j
        while v != graph.fusion:
            hop = next_hop[v]
            assert hop is not None  # guarded by reverse_dijkstra
            active.add((v, hop))
            v = hop
    return TrainingTopology(graph=graph, active=tuple(sorted(active)))


def full_topology(graph: NetworkGraph) -> TrainingTopology:
    """All training-active edges: every edge that feeds a relay or the fusion node.

    Edges into sensors (data ingestion) are local reads, not transmissions,
    so they never count toward exchanged bits.
    """
    active = tuple(
        sorted((u, v) for (u, v) in graph.edges if graph.roles[v] in (RELAY, FUSION))
    )
    return TrainingTopology(graph=graph, active=active)


def exchange_bits(
    topology: TrainingTopology, bits_per_scalar: int, samples_per_epoch: int
) -> int:
    """Exact bits exchanged per training epoch on the active edges.

    Each sample sends one forward message and one backward error vector per
    active edge, hence the factor two.  Pure integer arithmetic.
    """
    if samples_per_epoch < 1:
        raise ValueError(f"samples_per_epoch must be >= 1, got {samples_per_epoch}")
    if bits_per_scalar < 1:
        raise ValueError(f"bits_per_scalar must be >= 1, got {bits_per_scalar}")
    return 2 * bits_per_scalar * samples_per_epoch * topology.total_width()


def reduction_ratio(sparse: TrainingTopology, dense: TrainingTopology) -> float:
    """Ratio of total active message width, sparse over dense.

    Equals the active-edge ratio when all widths are equal; the exchange
    gain is one minus this value.
    """
    dense_width = dense.total_width()
    if dense_width == 0:
        raise ValueError("dense topology has zero total width")
    return sparse.total_width() / dense_width


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise GraphSpecError(message)


def parse_graph_spec(text: str) -> tuple[NetworkGraph, CostWeights]:
    """Parse a topology document (JSON) into a validated graph and cost weights.

    The document has ``nodes`` (list of ``{id, role}``), ``edges`` (list of
    ``{from, to, capacity, latency, reliability, width}``) and an optional
    ``cost_weights`` object.  Raises ``GraphSpecError`` with the offending
    field on malformed input or invariant violations.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSpecError(f"topology file is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "topology document must be a JSON object")
    _require("nodes" in doc, "topology document is missing 'nodes'")
    _require("edges" in doc, "topology document is missing 'edges'")

    nodes = doc["nodes"]
    _require(isinstance(nodes, list) and nodes, "'nodes' must be a non-empty list")
    roles_by_id: dict[int, str] = {}
    for i, entry in enumerate(nodes):
        _require(isinstance(entry, dict), f"node #{i} must be an object")
        _require("id" in entry and "role" in entry, f"node #{i} needs 'id' and 'role'")
        node_id, role = entry["id"], entry["role"]
        _require(isinstance(node_id, int) and node_id >= 0, f"node #{i}: bad id {node_id!r}")
        _require(role in ROLES, f"node #{i}: unknown role {role!r}")
        _require(node_id not in roles_by_id, f"node #{i}: duplicate id {node_id}")
        roles_by_id[node_id] = role
    _require(
        sorted(roles_by_id) == list(range(len(roles_by_id))),
        "node ids must be exactly 0..N-1",
    )
    roles = tuple(roles_by_id[i] for i in range(len(roles_by_id)))

    edges: dict[Edge, EdgeAttr] = {}
    for i, entry in enumerate(doc["edges"]):
        _require(isinstance(entry, dict), f"edge #{i} must be an object")
        for key in ("from", "to", "capacity"):
            _require(key in entry, f"edge #{i} is missing '{key}'")
        u, v = entry["from"], entry["to"]
        _require(isinstance(u, int) and isinstance(v, int), f"edge #{i}: endpoints must be integers")
        _require((u, v) not in edges, f"edge #{i}: duplicate edge ({u}, {v})")
        attr = EdgeAttr(
            capacity=float(entry["capacity"]),
            latency=float(entry.get("latency", 0.0)),
            reliability=float(entry.get("reliability", 1.0)),
            width=int(entry.get("width", 3)),
        )
        try:
            attr.validate()
        except GraphSpecError as exc:
            raise GraphSpecError(f"edge #{i} ({u} -> {v}): {exc}") from exc
        edges[(u, v)] = attr

    cw = doc.get("cost_weights", {})
    _require(isinstance(cw, dict), "'cost_weights' must be an object")
    weights = CostWeights(
        alpha=float(cw.get("alpha", 1.0)),
        beta=float(cw.get("beta", 0.0)),
        gamma=float(cw.get("gamma", 0.0)),
        epsilon=float(cw.get("epsilon", 1e-9)),
        bits_per_scalar=int(cw.get("bits_per_scalar", 32)),
    )
    weights.validate()

    graph = NetworkGraph(roles=roles, edges=edges)
    graph.validate()
    return graph, weights


def load_topology(path: str | Path) -> tuple[NetworkGraph, CostWeights]:
    """Read and parse a topology file."""
    return parse_graph_spec(Path(path).read_text())


def reference_topology_path() -> Path:
    """Path of the bundled 10-node reference topology file."""
    return Path(str(resources.files(__package__).joinpath("data/paper_topology.json")))


def load_reference_topology() -> tuple[NetworkGraph, CostWeights]:
    """Parse the bundled 10-node reference topology."""
    return load_topology(reference_topology_path())
