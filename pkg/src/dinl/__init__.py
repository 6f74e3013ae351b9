"""Shortest-path-tree pruned in-network learning: simulator and library.

Distributed neural modules sit on the nodes of a communication DAG and train
by exchanging forward activations and backward error vectors over the active
edges only.  Pruning the candidate graph to a capacity-aware shortest-path
tree cuts the training exchange in proportion to the removed link width,
and a Gaussian finite-rate gate with a KL penalty trades latent information
rate against prediction loss on the surviving tree.
"""

from .engine import (
    Architecture,
    EngineError,
    EvalResult,
    TrainConfig,
    WaveTrace,
    build_modules,
    count_params,
    evaluate,
    forward_wave,
    backward_wave,
    train,
)
from .graph import (
    CostWeights,
    EdgeAttr,
    GraphSpecError,
    NetworkGraph,
    TrainingTopology,
    build_spt,
    edge_cost,
    exchange_bits,
    full_topology,
    load_reference_topology,
    load_topology,
    parse_graph_spec,
    reduction_ratio,
    reference_topology_path,
    reverse_dijkstra,
)
from .harness import (
    ExperimentRecord,
    FrontierPoint,
    SummaryRow,
    emit_results,
    load_records,
    run_experiment,
    summarize,
    sweep_lambda,
)
from .nn import Adam, DenseLayer, GaussianGate, bce_with_logits, empirical_mi
from .task import Dataset, TaskSpec, generate, label_balance, load_dataset_csv, save_dataset_csv

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Architecture",
    "CostWeights",
    "Dataset",
    "DenseLayer",
    "EdgeAttr",
    "EngineError",
    "EvalResult",
    "ExperimentRecord",
    "FrontierPoint",
    "GaussianGate",
    "GraphSpecError",
    "NetworkGraph",
    "SummaryRow",
    "TaskSpec",
    "TrainConfig",
    "TrainingTopology",
    "WaveTrace",
    "backward_wave",
    "bce_with_logits",
    "build_modules",
    "build_spt",
    "count_params",
    "edge_cost",
    "emit_results",
    "empirical_mi",
    "evaluate",
    "exchange_bits",
    "forward_wave",
    "full_topology",
    "generate",
    "label_balance",
    "load_dataset_csv",
    "load_records",
    "load_reference_topology",
    "load_topology",
    "parse_graph_spec",
    "reduction_ratio",
    "reference_topology_path",
    "reverse_dijkstra",
    "run_experiment",
    "save_dataset_csv",
    "summarize",
    "sweep_lambda",
    "train",
]
