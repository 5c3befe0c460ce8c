"""Budget allocation for selecting the best subset of many noisy alternatives."""

from .core import (
    BudgetPlan,
    GoodSet,
    ProblemInstance,
    Relation,
    SampleState,
    SelectionResult,
    budget_from_money,
    good_set,
    ibr_relation,
    is_correct_selection,
    is_good_ranking,
    is_good_screening,
    top_m_select,
    update_mean,
)
from .exceptions import ConfigurationError, DatasetError, ScreeningError

__version__ = "0.1.0"

__all__ = [
    "BudgetPlan",
    "ConfigurationError",
    "DatasetError",
    "GoodSet",
    "ProblemInstance",
    "Relation",
    "SampleState",
    "ScreeningError",
    "SelectionResult",
    "budget_from_money",
    "good_set",
    "ibr_relation",
    "is_correct_selection",
    "is_good_ranking",
    "is_good_screening",
    "top_m_select",
    "update_mean",
]
