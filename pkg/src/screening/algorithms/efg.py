"""Explore-first greedy selection: EFG-m, EFG-M and the seeded EFG-M+."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import BudgetPlan, SampleState, SelectionResult
from ..exceptions import ConfigurationError
from ._common import EfgParams, as_problem, as_rng, greedy_phase, sample_each


def _explore_then_greedy(problem, evaluator, plan, width, seed):
    problem = as_problem(problem, evaluator)
    k = problem.k
    if plan.explore_per_alt < 1:
        raise ConfigurationError("exploration needs at least one observation per alternative")
    if plan.total < k * plan.explore_per_alt:
        raise ConfigurationError(
            f"budget {plan.total} is below the exploration cost {k * plan.explore_per_alt}"
        )
    if width > k:
        raise ConfigurationError(f"greedy width {width} exceeds k={k}")
    rng = as_rng(seed)
    state = SampleState(k)
    sample_each(state, evaluator, rng, np.arange(k), plan.explore_per_alt)
    greedy = plan.total - state.total
    greedy_phase(state, evaluator, rng, width, greedy)
    return SelectionResult.from_state(state, problem.m)


def run_efg_m(problem, evaluator, plan: BudgetPlan, params: EfgParams = None, seed=None):
    """Explore-first top-m greedy.

    Every alternative receives ``plan.explore_per_alt`` observations, then the
    rest of ``plan.total`` goes one observation at a time to the current top-m
    by sample mean.

    Parameters
    ----------
    problem : ProblemInstance
    evaluator : Evaluator
    plan : BudgetPlan
        Seeding is ignored; everything beyond exploration is greedy.
    params : EfgParams, optional
        Only ``m`` matters here; defaults to ``problem.m``.
    seed : int, Generator or None

    Returns
    -------
    SelectionResult
    """
    return _explore_then_greedy(problem, evaluator, plan, problem.m, seed)


def run_efg_M(problem, evaluator, plan: BudgetPlan, params: EfgParams = None, seed=None):
    """Explore-first top-M greedy; greedy rounds sample the current top-M."""
    params = params or EfgParams(m=problem.m)
    width = params.width(2)
    if width < problem.m:
        raise ConfigurationError(f"greedy width {width} is below m={problem.m}")
    return _explore_then_greedy(problem, evaluator, plan, width, seed)


@dataclass(frozen=True)
class SeedingPlan:
    """Doubling groups over a seeded ranking.

    ``group_ranges[r]`` is a half-open slice ``(lo, hi)`` of the ranking and
    every alternative in it receives ``per_group_sample[r]`` exploration draws.
    """

    G: int
    group_ranges: tuple
    per_group_sample: tuple

    @property
    def sizes(self):
        return tuple(hi - lo for lo, hi in self.group_ranges)

    @property
    def cost(self) -> int:
        return int(sum(s * n for s, n in zip(self.sizes, self.per_group_sample)))


def group_count(k: int, m: int) -> int:
    if k < 2 * m:
        raise ConfigurationError(f"seeding needs k >= 2m, got k={k}, m={m}")
    G = int(math.floor(math.log2(k / m)))
    # Guard against log2 rounding just below an exact power of two.
    while m * 2 ** (G + 1) <= k:
        G += 1
    return G


def seeding_plan(k: int, m: int, n0: int, G: int = None) -> SeedingPlan:
    """Group boundaries and per-group exploration sizes.

    Group ``r`` (1-based) covers ranks ``floor(k(2^(r-1)-1)/D)`` up to
    ``floor(k(2^r-1)/D)`` with ``D = 2^G - 1``, so group sizes roughly double
    and the last group ends at ``k``. Each of its members receives
    ``floor(n0 D / (G 2^(r-1)))`` draws, which keeps the total near ``n0 k``.
    Allocations that round to zero are raised to one and the extra cost is
    taken from the first group.
    """
    if G is None:
        G = group_count(k, m)
    if G < 1:
        raise ConfigurationError("group count must be positive")
    if n0 < 1:
        raise ConfigurationError("seeded exploration needs n0 >= 1")
    D = 2 ** G - 1
    bounds = [0] + [k * (2 ** r - 1) // D for r in range(1, G + 1)]
    bounds[-1] = k
    ranges = tuple((bounds[r], bounds[r + 1]) for r in range(G))
    if any(hi <= lo for lo, hi in ranges):
        raise ConfigurationError(f"k={k} is too small for {G} seeding groups")
    n = [n0 * D // (G * 2 ** r) for r in range(G)]
    deficit = 0
    for r in range(G):
        if n[r] < 1:
            deficit += (1 - n[r]) * (ranges[r][1] - ranges[r][0])
            n[r] = 1
    if deficit:
        size1 = ranges[0][1] - ranges[0][0]
        n[0] -= -(-deficit // size1)
        if n[0] < 1:
            raise ConfigurationError("seeding groups leave the first group without samples")
    return SeedingPlan(G=G, group_ranges=ranges, per_group_sample=tuple(int(x) for x in n))


def seeded_ranking(means) -> np.ndarray:
    """All indices by descending mean, lower index first on ties."""
    return np.argsort(-np.asarray(means, dtype=float), kind="stable")


def run_efg_M_plus(problem, evaluator, plan: BudgetPlan, params: EfgParams = None, seed=None):
    """EFG-M with a seeding pass that steers exploration toward promising alternatives.

    Phase one draws ``plan.seeding_per_alt`` observations per alternative
    and ranks by their means. Phase two splits the ranking into doubling
    groups (:func:`seeding_plan`) and draws fresh observations, more for
    higher-ranked groups; seeding observations are dropped from the
    statistics. Phase three is top-M greedy on whatever budget remains.
    """
    problem = as_problem(problem, evaluator)
    params = params or EfgParams(m=problem.m)
    k, m = problem.k, problem.m
    width = params.width(2)
    if width > k:
        raise ConfigurationError(f"greedy width {width} exceeds k={k}")
    if plan.seeding_per_alt < 1:
        raise ConfigurationError("EFG-M+ needs at least one seeding observation per alternative")
    sp = seeding_plan(k, m, plan.explore_per_alt, params.group_count_override)
    spend = k * plan.seeding_per_alt + sp.cost
    if spend > plan.total:
        raise ConfigurationError(f"seeding and exploration need {spend} > budget {plan.total}")
    rng = as_rng(seed)

    seed_state = SampleState(k)
    sample_each(seed_state, evaluator, rng, np.arange(k), plan.seeding_per_alt)
    ranking = seeded_ranking(seed_state.means)

    state = SampleState(k)
    reps = np.empty(k, dtype=np.int64)
    for (lo, hi), n_r in zip(sp.group_ranges, sp.per_group_sample):
        reps[ranking[lo:hi]] = n_r
    sample_each(state, evaluator, rng, np.arange(k), reps)

    greedy_phase(state, evaluator, rng, width, plan.total - spend)
    return SelectionResult.from_state(state, m, consumed=seed_state.total + state.total)
