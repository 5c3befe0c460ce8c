"""Successive accept-reject for top-m identification, and its greedy hybrid."""

from __future__ import annotations

import numpy as np

from ..core import BudgetPlan, SampleState, SelectionResult
from ..exceptions import ConfigurationError
from ._common import EfgParams, as_problem, as_rng, greedy_phase, sample_each


def log_bar(k: int) -> float:
    return 0.5 + sum(1.0 / i for i in range(2, k + 1))


def sar_schedule(k: int, budget: int) -> np.ndarray:
    """Cumulative per-arm sample counts ``n_1 <= ... <= n_{k-1}``.

    ``n_p = ceil((B - k) / (logbar(k) (k + 1 - p)))``. Arms still active in
    phase ``p`` end it with ``n_p`` observations; the last two arms both end
    with ``n_{k-1}``, so the schedule never spends more than ``B``.
    """
    if k < 2:
        raise ConfigurationError("SAR needs at least two arms")
    if budget <= k:
        raise ConfigurationError(f"SAR needs a budget above k={k}, got {budget}")
    lb = log_bar(k)
    p = np.arange(1, k)
    n = np.ceil((budget - k) / (lb * (k + 1 - p)))
    return n.astype(np.int64)


def _accepted_result(state, accepted, consumed=None):
    accepted = np.asarray(accepted, dtype=np.int64)
    order = np.lexsort((accepted, -state.means[accepted]))
    sel = accepted[order]
    return SelectionResult(
        selected=sel,
        terminal_means=state.means[sel].copy(),
        terminal_counts=state.counts[sel].copy(),
        consumed_budget=int(state.total if consumed is None else consumed),
        state=state,
    )


def _sar_core(state, evaluator, rng, m, budget):
    k = state.k
    sched = sar_schedule(k, budget)
    if sched[0] < 1:
        raise ConfigurationError(f"budget {budget} gives SAR no first-phase samples for k={k}")
    active = np.arange(k)
    accepted = []
    to_accept = m
    prev = 0
    for p in range(k - 1):
        extra = int(sched[p] - prev)
        prev = int(sched[p])
        if extra > 0:
            sample_each(state, evaluator, rng, active, extra)
        mu = state.means[active]
        order = np.lexsort((active, -mu))
        ranked = active[order]
        vals = mu[order]
        upper = vals[:to_accept] - vals[to_accept]
        lower = vals[to_accept - 1] - vals[to_accept:]
        gaps = np.concatenate([upper, lower])
        j = int(np.argmax(gaps))
        arm = ranked[j]
        if j < to_accept:
            accepted.append(int(arm))
            to_accept -= 1
        active = np.sort(np.delete(ranked, j))
        if to_accept == 0:
            break
        if to_accept == active.shape[0]:
            accepted.extend(int(a) for a in active)
            break
    return accepted


def run_sar(problem, evaluator, budget: int, seed=None):
    """Successive accept-reject with a fixed budget.

    Runs at most ``k - 1`` phases. Each phase tops every active arm up to the
    schedule count, then removes the arm whose empirical gap is largest:
    accepted when it sits among the current top, rejected otherwise.

    Returns
    -------
    SelectionResult
        The accepted arms ordered by terminal sample mean.
    """
    problem = as_problem(problem, evaluator)
    rng = as_rng(seed)
    state = SampleState(problem.k)
    accepted = _sar_core(state, evaluator, rng, problem.m, int(budget))
    return _accepted_result(state, accepted)


def run_sar_M(problem, evaluator, plan: BudgetPlan, params: EfgParams = None, seed=None):
    """SAR on the exploration tranche, then top-M greedy on the remainder.

    SAR's accept/reject decisions are discarded; its sample statistics seed
    the greedy phase, which receives ``plan.total`` minus what SAR spent.
    With a zero greedy tranche the result is plain SAR.
    """
    problem = as_problem(problem, evaluator)
    params = params or EfgParams(m=problem.m)
    width = params.width(2)
    k = problem.k
    if width > k:
        raise ConfigurationError(f"greedy width {width} exceeds k={k}")
    rng = as_rng(seed)
    state = SampleState(k)
    explore = plan.total - plan.greedy_total
    accepted = _sar_core(state, evaluator, rng, problem.m, explore)
    if plan.greedy_total == 0:
        return _accepted_result(state, accepted)
    greedy_phase(state, evaluator, rng, width, plan.total - state.total)
    return SelectionResult.from_state(state, problem.m)


def sar_budget_used(k: int, m: int, budget: int) -> int:
    """Upper bound on SAR's spend: the full schedule without early stopping."""
    sched = sar_schedule(k, budget)
    return int(sched.sum() + sched[-1])


__all__ = ["log_bar", "run_sar", "run_sar_M", "sar_schedule", "sar_budget_used"]
