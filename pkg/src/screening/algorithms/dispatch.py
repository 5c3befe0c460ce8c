"""Run any algorithm by name from a total budget and fractional split."""

from __future__ import annotations

from ..core import BudgetPlan
from ..exceptions import ConfigurationError
from ._common import EfgParams
from .efg import run_efg_M, run_efg_M_plus, run_efg_m
from .ocbam import ComparatorParams, run_ocbam
from .sar import run_sar, run_sar_M

ALGORITHMS = ("efg_m", "efg_M", "efg_M_plus", "sar", "sar_M", "ocbam")


def plan_for(name, k, budget, greedy_fraction=0.2, seeding_fraction=0.2) -> BudgetPlan:
    """Budget plan used by ``name`` for a total of ``budget`` observations."""
    seeding = seeding_fraction if name == "efg_M_plus" else 0.0
    return BudgetPlan.from_fractions(k, budget / k, greedy_fraction, seeding)


def run_algorithm(
    name,
    problem,
    evaluator,
    budget,
    *,
    M=None,
    greedy_fraction=0.2,
    seeding_fraction=0.2,
    group_count=None,
    comparator=None,
    seed=None,
):
    """Dispatch to one of ``efg_m``, ``efg_M``, ``efg_M_plus``, ``sar``,
    ``sar_M`` or ``ocbam``.

    ``budget`` is the total number of observations ``B``, or a
    :class:`BudgetPlan` used as is by the explore-first algorithms (SAR and
    OCBAm then receive ``plan.total``).
    """
    plan = budget if isinstance(budget, BudgetPlan) else None
    budget = plan.total if plan is not None else int(budget)
    k = problem.k
    if name == "sar":
        return run_sar(problem, evaluator, budget, seed=seed)
    if name == "ocbam":
        return run_ocbam(problem, evaluator, budget, comparator or ComparatorParams(), seed=seed)
    params = EfgParams(
        m=problem.m,
        M=M,
        greedy_fraction=greedy_fraction,
        seeding_fraction=seeding_fraction if name == "efg_M_plus" else 0.0,
        group_count_override=group_count,
    )
    if plan is None:
        plan = plan_for(name, k, budget, greedy_fraction, seeding_fraction)
    plan.check(k)
    if name == "efg_m":
        return run_efg_m(problem, evaluator, plan, params, seed=seed)
    if name == "efg_M":
        return run_efg_M(problem, evaluator, plan, params, seed=seed)
    if name == "efg_M_plus":
        return run_efg_M_plus(problem, evaluator, plan, params, seed=seed)
    if name == "sar_M":
        return run_sar_M(problem, evaluator, plan, params, seed=seed)
    raise ConfigurationError(f"unknown algorithm {name!r}")
