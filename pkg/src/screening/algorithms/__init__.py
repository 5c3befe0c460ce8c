"""Budget-allocation algorithms for top-m subset selection."""

from ._common import EfgParams, greedy_phase
from .budget import consistent_budget
from .dispatch import ALGORITHMS, plan_for, run_algorithm
from .efg import (
    SeedingPlan,
    group_count,
    run_efg_M,
    run_efg_M_plus,
    run_efg_m,
    seeded_ranking,
    seeding_plan,
)
from .estimators import EFGSelector, OCBAmSelector, SARSelector
from .ocbam import ComparatorParams, ocbam_ratios, run_ocbam
from .sar import log_bar, run_sar, run_sar_M, sar_budget_used, sar_schedule


__all__ = [
    "ALGORITHMS",
    "ComparatorParams",
    "EFGSelector",
    "EfgParams",
    "OCBAmSelector",
    "SARSelector",
    "SeedingPlan",
    "consistent_budget",
    "plan_for",
    "run_algorithm",
    "greedy_phase",
    "group_count",
    "log_bar",
    "ocbam_ratios",
    "run_efg_M",
    "run_efg_M_plus",
    "run_efg_m",
    "run_ocbam",
    "run_sar",
    "run_sar_M",
    "sar_budget_used",
    "sar_schedule",
    "seeded_ranking",
    "seeding_plan",
]
