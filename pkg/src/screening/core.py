"""Problem definitions, running sample statistics and success predicates.

Alternatives are indexed from 0. Every ordering produced here sorts by
descending sample mean and breaks ties in favour of the lower index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError

__all__ = [
    "ProblemInstance",
    "SampleState",
    "BudgetPlan",
    "SelectionResult",
    "GoodSet",
    "Relation",
    "update_mean",
    "top_m_select",
    "good_set",
    "is_correct_selection",
    "is_good_screening",
    "is_good_ranking",
    "ibr_relation",
    "budget_from_money",
]


@dataclass
class ProblemInstance:
    """A subset-selection problem: pick the ``m`` best of ``k`` alternatives.

    Parameters
    ----------
    k : int
        Number of alternatives.
    m : int
        Size of the subset to select, ``1 <= m < k``.
    delta : float
        Indifference-zone parameter.
    true_means : array-like of shape (k,), optional
        Known means, available for synthetic or simulated problems.
    evaluator_id : str, optional
        Name of the evaluator registration that produces observations.
    """

    k: int
    m: int
    delta: float = 0.0
    true_means: Optional[np.ndarray] = None
    evaluator_id: Optional[str] = None

    def __post_init__(self):
        if self.k < 1 or self.m < 1 or self.m >= self.k:
            raise ConfigurationError(f"need 1 <= m < k, got m={self.m}, k={self.k}")
        if self.delta < 0:
            raise ConfigurationError(f"delta must be nonnegative, got {self.delta}")
        if self.true_means is not None:
            self.true_means = np.asarray(self.true_means, dtype=float)
            if self.true_means.shape != (self.k,):
                raise ConfigurationError(
                    f"true_means has shape {self.true_means.shape}, expected ({self.k},)"
                )


class SampleState:
    """Per-alternative sample counts and running means.

    Means use a compensated running average so that millions of incremental
    updates do not drift from the batch mean. Entries with a zero count hold
    ``nan``.
    """

    def __init__(self, k: int):
        self.counts = np.zeros(k, dtype=np.int64)
        self.means = np.full(k, np.nan)
        self._comp = np.zeros(k)
        self.total = 0

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    def update(self, alt: int, value: float) -> "SampleState":
        if not 0 <= alt < self.k:
            raise IndexError(f"alternative {alt} out of range [0, {self.k})")
        if self.counts[alt] == 0:
            self.means[alt] = 0.0
        _kernels.update_one(self.means, self._comp, self.counts, alt, float(value))
        self.total += 1
        return self

    def update_many(self, alts, values) -> "SampleState":
        alts = np.asarray(alts, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if alts.size and (alts.min() < 0 or alts.max() >= self.k):
            raise IndexError(f"alternative index out of range [0, {self.k})")
        fresh = alts[self.counts[alts] == 0]
        self.means[fresh] = 0.0
        _kernels.update_many(self.means, self._comp, self.counts, alts, values)
        self.total += alts.size
        return self

    def absorb_batch(self, alts, values) -> "SampleState":
        """Fold a batch of observations in one vectorised pass.

        ``alts`` and ``values`` are parallel arrays; the result equals feeding
        the observations through :meth:`update` up to rounding.
        """
        alts = np.asarray(alts, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        k = self.k
        n_new = np.bincount(alts, minlength=k)
        s_new = np.bincount(alts, weights=values, minlength=k)
        hit = n_new > 0
        n_old = self.counts[hit]
        old = np.where(n_old > 0, self.means[hit], 0.0)
        n_tot = n_old + n_new[hit]
        self.means[hit] = old + (s_new[hit] - n_new[hit] * old) / n_tot
        self.counts[hit] = n_tot
        self._comp[hit] = 0.0
        self.total += alts.size
        return self

    def reset(self) -> "SampleState":
        self.counts[:] = 0
        self.means[:] = np.nan
        self._comp[:] = 0.0
        self.total = 0
        return self

    def copy(self) -> "SampleState":
        out = SampleState(self.k)
        out.counts = self.counts.copy()
        out.means = self.means.copy()
        out._comp = self._comp.copy()
        out.total = self.total
        return out

    def __repr__(self):
        return f"SampleState(k={self.k}, total={self.total})"


def update_mean(state: SampleState, alt: int, value: float) -> SampleState:
    """Add one observation of ``alt`` to ``state`` (in place) and return it."""
    return state.update(alt, value)


@dataclass(frozen=True)
class BudgetPlan:
    """Split of a total observation budget into seeding, exploration and greedy tranches.

    ``seeding_per_alt`` and ``explore_per_alt`` are per alternative;
    ``greedy_total`` is in raw observations.
    """

    total: int
    seeding_per_alt: int
    explore_per_alt: int
    greedy_total: int

    def __post_init__(self):
        if self.total < 1 or self.explore_per_alt < 1:
            raise ConfigurationError("budget total and explore_per_alt must be positive")
        if self.seeding_per_alt < 0 or self.greedy_total < 0:
            raise ConfigurationError("budget tranches must be nonnegative")

    def check(self, k: int) -> None:
        lhs = (self.seeding_per_alt + self.explore_per_alt) * k + self.greedy_total
        if lhs != self.total:
            raise ConfigurationError(
                f"plan does not add up for k={k}: {lhs} != total {self.total}"
            )

    @classmethod
    def from_fractions(cls, k, per_alt_budget, greedy_fraction=0.2, seeding_fraction=0.0):
        """Build a plan for ``B = per_alt_budget * k``.

        Seeding and greedy tranches are fractions of the total budget; the
        exploration phase receives the rest, rounded down to whole
        observations per alternative, and any rounding slack goes to greedy.
        """
        c = float(per_alt_budget)
        total = int(round(c * k))
        if not 0 <= seeding_fraction < 1 or not 0 <= greedy_fraction < 1:
            raise ConfigurationError("fractions must lie in [0, 1)")
        if seeding_fraction + greedy_fraction >= 1:
            raise ConfigurationError("seeding and greedy fractions leave no exploration budget")
        n_sd = int(math.floor(seeding_fraction * c + 1e-9))
        n_0 = int(math.floor((1.0 - seeding_fraction - greedy_fraction) * c + 1e-9))
        if n_0 < 1:
            raise ConfigurationError(f"budget c={c} leaves no exploration observations")
        greedy = total - (n_sd + n_0) * k
        return cls(total=total, seeding_per_alt=n_sd, explore_per_alt=n_0, greedy_total=greedy)


@dataclass
class SelectionResult:
    """Terminal output of a budget-allocation run.

    ``selected`` is ordered by descending terminal sample mean.
    """

    selected: np.ndarray
    terminal_means: np.ndarray
    terminal_counts: np.ndarray
    consumed_budget: int
    state: Optional[SampleState] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_state(cls, state: SampleState, m: int, consumed=None) -> "SelectionResult":
        """Terminal top-``m`` of ``state``.

        ``consumed`` defaults to ``state.total``; algorithms that discard
        observations from their statistics (seeding) pass the true spend.
        """
        sel = top_m_select(state, m)
        return cls(
            selected=sel,
            terminal_means=state.means[sel].copy(),
            terminal_counts=state.counts[sel].copy(),
            consumed_budget=int(state.total if consumed is None else consumed),
            state=state,
        )


def top_m_select(state, m: int) -> np.ndarray:
    """Indices of the ``m`` largest sample means in descending order.

    Parameters
    ----------
    state : SampleState or array-like of means
        When a :class:`SampleState` is given every alternative must have at
        least one observation.
    m : int

    Returns
    -------
    ndarray of int64, shape (m,)
    """
    if isinstance(state, SampleState):
        if np.any(state.counts == 0):
            raise ValueError("every alternative needs at least one observation")
        means = state.means
    else:
        means = np.asarray(state, dtype=float)
    if m < 1 or m > means.shape[0]:
        raise ValueError(f"m={m} must lie in [1, {means.shape[0]}]")
    return _kernels.top_indices(np.ascontiguousarray(means, dtype=np.float64), int(m))


@dataclass(frozen=True)
class GoodSet:
    members: frozenset
    threshold: float

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        return i in self.members


def good_set(means, m: int, delta: float) -> GoodSet:
    """Alternatives whose mean is at least the m-th largest mean minus ``delta``."""
    means = np.asarray(means, dtype=float)
    if m < 1 or m > means.shape[0]:
        raise ValueError(f"m={m} exceeds the number of means {means.shape[0]}")
    mth = np.sort(means)[::-1][m - 1]
    threshold = mth - delta
    return GoodSet(frozenset(np.flatnonzero(means >= threshold).tolist()), float(threshold))


def is_correct_selection(result: SelectionResult, true_means) -> bool:
    true_means = np.asarray(true_means, dtype=float)
    m = len(result.selected)
    best = top_m_select(true_means, m)
    return set(best.tolist()) == set(np.asarray(result.selected).tolist())


def is_good_screening(result: SelectionResult, good: GoodSet) -> bool:
    return all(int(i) in good.members for i in result.selected)


def is_good_ranking(result: SelectionResult, true_means, delta: float) -> bool:
    """Whether every pair of selected alternatives whose true means differ by
    more than ``delta`` is ordered correctly by terminal sample means."""
    if true_means is None:
        raise ValueError("true means are required to score a ranking")
    mu = np.asarray(true_means, dtype=float)[np.asarray(result.selected)]
    xbar = np.asarray(result.terminal_means, dtype=float)
    dominates = (mu[:, None] - mu[None, :]) > delta
    ordered = xbar[:, None] > xbar[None, :]
    return bool(np.all(ordered[dominates]))


class Relation(enum.Enum):
    INDIFFERENT = "indifferent"
    A_DOMINATES = "a_dominates"
    B_DOMINATES = "b_dominates"


def ibr_relation(mu_a: float, mu_b: float, delta: float) -> Relation:
    """Indifference-based ranking relation between two means."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    gap = mu_a - mu_b
    if gap >= delta and not (delta == 0 and gap == 0):
        return Relation.A_DOMINATES
    if -gap >= delta and not (delta == 0 and gap == 0):
        return Relation.B_DOMINATES
    return Relation.INDIFFERENT


def budget_from_money(money: float, cost_per_query: float) -> int:
    """Number of affordable queries, ``floor(money / cost_per_query)``.

    Ratios within 1e-9 (relative) of an integer are snapped to it so that
    decimal inputs such as ``62.4 / 4.8e-5`` are not lost to binary rounding.
    """
    if cost_per_query <= 0:
        raise ValueError("cost_per_query must be positive")
    if money < 0:
        raise ValueError("money must be nonnegative")
    q = money / cost_per_query
    r = round(q)
    if abs(q - r) <= 1e-9 * max(1.0, abs(q)):
        return int(r)
    return int(math.floor(q))
