"""Sampling phases shared by the allocation algorithms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import _kernels
from ..core import ProblemInstance, SampleState
from ..evaluators.base import LocationFamily
from ..exceptions import ConfigurationError

# Cap on observations requested from an evaluator in one call.
_CHUNK = 1 << 20


@dataclass
class EfgParams:
    """Tuning knobs for the explore-first greedy family.

    Parameters
    ----------
    m : int
        Subset size.
    M : int, optional
        Greedy width. ``None`` means ``m`` for EFG-m and ``2 * m`` for the
        widened variants.
    greedy_fraction : float
        Share of the total budget reserved for the greedy phase.
    seeding_fraction : float
        Share of the total budget spent on seeding (EFG-M+ only).
    group_count_override : int, optional
        Number of doubling groups; by default ``floor(log2(k / m))``.
    """

    m: int
    M: Optional[int] = None
    greedy_fraction: float = 0.2
    seeding_fraction: float = 0.2
    group_count_override: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("m must be positive")
        if self.M is not None and self.M < self.m:
            raise ConfigurationError(f"greedy width M={self.M} is below m={self.m}")
        if not 0 <= self.greedy_fraction < 1 or not 0 <= self.seeding_fraction < 1:
            raise ConfigurationError("fractions must lie in [0, 1)")
        if self.greedy_fraction + self.seeding_fraction >= 1:
            raise ConfigurationError("greedy and seeding fractions leave nothing to explore")
        if self.group_count_override is not None and self.group_count_override < 1:
            raise ConfigurationError("group count must be positive")

    def width(self, default_ratio: int) -> int:
        return self.M if self.M is not None else default_ratio * self.m


def as_problem(problem, evaluator) -> ProblemInstance:
    if problem.k != evaluator.n_alternatives:
        raise ConfigurationError(
            f"problem has k={problem.k} but the evaluator serves {evaluator.n_alternatives}"
        )
    return problem


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_each(state: SampleState, evaluator, rng, alts, reps) -> int:
    """Draw ``reps[j]`` observations of ``alts[j]`` (alternative-major order)."""
    alts = np.asarray(alts, dtype=np.int64)
    reps = np.broadcast_to(np.asarray(reps, dtype=np.int64), alts.shape)
    order = np.repeat(alts, reps)
    for lo in range(0, order.shape[0], _CHUNK):
        block = order[lo:lo + _CHUNK]
        state.update_many(block, evaluator.sample(block, rng))
    return int(order.shape[0])


def greedy_phase(state: SampleState, evaluator, rng, width: int, budget: int) -> int:
    """Top-``width`` greedy rounds until ``budget`` observations are spent.

    Each round draws one observation for every alternative in the current
    top-``width`` by sample mean. A final partial round samples only the top
    ``budget % width``, so exactly ``budget`` observations are used.
    Location families run in compiled code; the draws are identical to the
    round-by-round path because base draws are consumed in call order.

    Returns
    -------
    int
        Number of rounds, counting a final partial one.
    """
    if budget <= 0:
        return 0
    if np.any(state.counts == 0):
        raise ConfigurationError("greedy phase needs every alternative sampled at least once")
    width = int(min(width, state.k))
    if isinstance(evaluator, LocationFamily):
        pool = evaluator.base_draws(rng, int(budget))
        rounds = _kernels.greedy_location(
            state.means, state._comp, state.counts, evaluator.offsets, pool, width
        )
        state.total += int(budget)
        return int(rounds)
    rounds = 0
    left = int(budget)
    while left > 0:
        w = min(width, left)
        sel = _kernels.top_indices(state.means, width)[:w]
        state.update_many(sel, evaluator.sample(sel, rng))
        left -= w
        rounds += 1
    return rounds
