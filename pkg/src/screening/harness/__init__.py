"""Macro-replication experiments: configuration, execution and aggregation."""

from .config import (
    METRICS,
    AlgorithmSpec,
    BudgetSpec,
    ExperimentConfig,
    ParallelSpec,
    ProblemSpec,
)
from .runner import (
    CSV_COLUMNS,
    SWEEP_AXES,
    ReplicationRecord,
    ReplicationReport,
    aggregate,
    budget_for,
    replication_seed,
    run_experiment,
    run_replication,
    run_replications,
    score_replication,
    sweep,
    write_csv,
)
from .truth import TrueMeans, build_problem, redundancy_truth, true_means_for

__all__ = [
    "AlgorithmSpec",
    "BudgetSpec",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "METRICS",
    "ParallelSpec",
    "ProblemSpec",
    "ReplicationRecord",
    "ReplicationReport",
    "SWEEP_AXES",
    "TrueMeans",
    "aggregate",
    "budget_for",
    "build_problem",
    "redundancy_truth",
    "replication_seed",
    "run_experiment",
    "run_replication",
    "run_replications",
    "score_replication",
    "sweep",
    "true_means_for",
    "write_csv",
]
