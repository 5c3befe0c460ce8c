"""Estimator-style wrappers around the allocation algorithms.

``fit`` takes an evaluator instead of a design matrix; the fitted
attributes describe the selected subset and the sampling effort.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..core import ProblemInstance, is_correct_selection
from ..exceptions import ConfigurationError
from .dispatch import run_algorithm
from .ocbam import ComparatorParams


class _SelectorBase(BaseEstimator):
    _algorithm: str = ""

    def _budget(self, k):
        if (self.budget is None) == (self.per_alt_budget is None):
            raise ConfigurationError("set exactly one of budget and per_alt_budget")
        if self.budget is not None:
            return int(self.budget)
        return int(round(self.per_alt_budget * k))

    def _run(self, evaluator, name, **kwargs):
        k = evaluator.n_alternatives
        problem = ProblemInstance(k=k, m=self.m)
        result = run_algorithm(name, problem, evaluator, self._budget(k),
                               seed=self.random_state, **kwargs)
        self.result_ = result
        self.selected_ = np.asarray(result.selected)
        state = result.state
        self.sample_means_ = state.means.copy()
        self.sample_counts_ = state.counts.copy()
        self.consumed_budget_ = result.consumed_budget
        self.n_alternatives_ = k
        return self

    def score(self, true_means):
        """1.0 if the selected subset is exactly the true top-m, else 0.0."""
        check_is_fitted(self, "selected_")
        return float(is_correct_selection(self.result_, true_means))


class EFGSelector(_SelectorBase):
    """Explore-first greedy selection.

    Parameters
    ----------
    m : int
        Subset size.
    variant : {"m", "M", "M_plus"}
        Greedy width ``m``, widened width ``M``, or widened with seeding.
    M : int, optional
        Greedy width for the widened variants (default ``2 * m``).
    budget, per_alt_budget : int or float
        Total budget ``B`` or ``B / k``; exactly one must be given.
    greedy_fraction, seeding_fraction : float
    random_state : int, Generator or None

    Attributes
    ----------
    selected_ : ndarray of shape (m,)
    sample_means_, sample_counts_ : ndarray of shape (k,)
    consumed_budget_ : int
    result_ : SelectionResult
    """

    def __init__(self, m=10, variant="M", M=None, budget=None, per_alt_budget=None,
                 greedy_fraction=0.2, seeding_fraction=0.2, random_state=None):
        self.m = m
        self.variant = variant
        self.M = M
        self.budget = budget
        self.per_alt_budget = per_alt_budget
        self.greedy_fraction = greedy_fraction
        self.seeding_fraction = seeding_fraction
        self.random_state = random_state

    def fit(self, evaluator, y=None):
        names = {"m": "efg_m", "M": "efg_M", "M_plus": "efg_M_plus"}
        if self.variant not in names:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        return self._run(evaluator, names[self.variant], M=self.M,
                         greedy_fraction=self.greedy_fraction,
                         seeding_fraction=self.seeding_fraction)


class SARSelector(_SelectorBase):
    """Successive accept-reject, optionally followed by top-M greedy (``greedy_fraction > 0``)."""

    def __init__(self, m=10, budget=None, per_alt_budget=None, greedy_fraction=0.0,
                 M=None, random_state=None):
        self.m = m
        self.budget = budget
        self.per_alt_budget = per_alt_budget
        self.greedy_fraction = greedy_fraction
        self.M = M
        self.random_state = random_state

    def fit(self, evaluator, y=None):
        if self.greedy_fraction > 0:
            return self._run(evaluator, "sar_M", M=self.M, greedy_fraction=self.greedy_fraction)
        return self._run(evaluator, "sar")


class OCBAmSelector(_SelectorBase):
    """Sequential OCBAm comparator."""

    def __init__(self, m=10, budget=None, per_alt_budget=None, n1_fraction=0.4, batch=10,
                 random_state=None):
        self.m = m
        self.budget = budget
        self.per_alt_budget = per_alt_budget
        self.n1_fraction = n1_fraction
        self.batch = batch
        self.random_state = random_state

    def fit(self, evaluator, y=None):
        cp = ComparatorParams(ocbam_n1_fraction=self.n1_fraction, ocbam_batch=self.batch)
        return self._run(evaluator, "ocbam", comparator=cp)
