"""Stochastic evaluators producing observations per alternative."""

import numpy as np

from .base import ConstantEvaluator, Evaluator, LocationFamily
from .empirical import EmpiricalDataset, EmpiricalEvaluator, dump_empirical, load_empirical
from .recorded import RecordedStream
from .redundancy import (
    RedundancyEvaluator,
    RedundancyProblem,
    enumerate_allocations,
    sample_redundancy,
)
from .synthetic import PRESETS, SyntheticConfig, SyntheticEvaluator, build_synthetic

__all__ = [
    "ConstantEvaluator",
    "EmpiricalDataset",
    "EmpiricalEvaluator",
    "Evaluator",
    "LocationFamily",
    "PRESETS",
    "RecordedStream",
    "RedundancyEvaluator",
    "RedundancyProblem",
    "SyntheticConfig",
    "SyntheticEvaluator",
    "build_synthetic",
    "dump_empirical",
    "enumerate_allocations",
    "estimate_true_means",
    "load_empirical",
    "sample_redundancy",
]


def estimate_true_means(evaluator, reps_per_alt, rng=None, max_batch=2_000_000):
    """Per-alternative sample means over ``reps_per_alt`` fresh draws.

    Returns
    -------
    means, standard_errors : ndarray of shape (k,)
    """
    if reps_per_alt < 1:
        raise ValueError("reps_per_alt must be at least 1")
    rng = np.random.default_rng(rng)
    k = evaluator.n_alternatives
    means = np.empty(k)
    ses = np.empty(k)
    per_chunk = max(1, max_batch // reps_per_alt)
    for lo in range(0, k, per_chunk):
        hi = min(k, lo + per_chunk)
        alts = np.repeat(np.arange(lo, hi), reps_per_alt)
        v = evaluator.sample(alts, rng).reshape(hi - lo, reps_per_alt)
        means[lo:hi] = v.mean(axis=1)
        if reps_per_alt > 1:
            ses[lo:hi] = v.std(axis=1, ddof=1) / np.sqrt(reps_per_alt)
        else:
            ses[lo:hi] = np.nan
    return means, ses
