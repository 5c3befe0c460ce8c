"""OCBAm comparator: sequential optimal computing budget allocation for top-m."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..core import SampleState, SelectionResult
from ..evaluators.base import LocationFamily
from ..exceptions import ConfigurationError
from ._common import as_problem, as_rng

VAR_FLOOR = 1e-12
GAP_FLOOR = 1e-12


@dataclass
class ComparatorParams:
    """Settings for the OCBAm comparator.

    Parameters
    ----------
    ocbam_n1_fraction : float
        Share of the per-alternative budget ``B / k`` spent on the initial
        equal allocation.
    ocbam_batch : int
        Observations handed to the most starving alternative per step.
    """

    ocbam_n1_fraction: float = 0.4
    ocbam_batch: int = 10

    def __post_init__(self):
        if not 0 < self.ocbam_n1_fraction < 1:
            raise ConfigurationError("ocbam_n1_fraction must lie in (0, 1)")
        if self.ocbam_batch < 1:
            raise ConfigurationError("ocbam_batch must be positive")


def ocbam_ratios(means, variances, m):
    """Normalised OCBAm allocation ratios for fixed statistics.

    With ``c`` the midpoint between the m-th and (m+1)-th largest sample
    means weighted by the opposite standard deviations, alternative ``i``
    receives a share proportional to ``variances[i] / (means[i] - c)**2``.
    """
    means = np.asarray(means, dtype=float)
    var = np.maximum(np.asarray(variances, dtype=float), VAR_FLOOR)
    top = _kernels.top_indices(means, m + 1)
    a, b = top[m - 1], top[m]
    sa, sb = np.sqrt(var[a]), np.sqrt(var[b])
    c = (sb * means[a] + sa * means[b]) / (sa + sb)
    gap = np.maximum(np.abs(means - c), GAP_FLOOR)
    r = var / gap**2
    return r / r.sum()


def run_ocbam(problem, evaluator, budget: int, params: ComparatorParams = None, seed=None):
    """OCBAm with an equal initial phase and batched sequential allocation.

    Each alternative first receives ``n1 = floor(n1_fraction * B / k)``
    observations. Afterwards the allocation ratios are recomputed from the
    current means and sample variances, and the next batch goes to the
    alternative whose target count exceeds its current count the most
    (ties to the lower index), until ``B`` is spent.
    """
    problem = as_problem(problem, evaluator)
    params = params or ComparatorParams()
    k, m = problem.k, problem.m
    budget = int(budget)
    n1 = int(params.ocbam_n1_fraction * budget / k)
    if n1 < 1:
        raise ConfigurationError(f"budget {budget} leaves OCBAm no initial samples for k={k}")
    rng = as_rng(seed)
    state = SampleState(k)
    m2 = np.zeros(k)

    alts = np.repeat(np.arange(k), n1)
    values = evaluator.sample(alts, rng).reshape(k, n1)
    # Initial statistics via the same compensated updates as everything else.
    state.update_many(alts, values.ravel())
    m2[:] = ((values - values.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)

    rest = budget - state.total
    if rest <= 0:
        return SelectionResult.from_state(state, m)
    batch = params.ocbam_batch
    if isinstance(evaluator, LocationFamily):
        pool = evaluator.base_draws(rng, rest)
        _kernels.ocbam_location(
            state.means, state._comp, state.counts, m2, evaluator.offsets, pool,
            m, batch, VAR_FLOOR, GAP_FLOOR,
        )
        state.total += rest
        return SelectionResult.from_state(state, m)
    while rest > 0:
        w = min(batch, rest)
        j = _kernels.ocbam_pick(
            state.means, m2, state.counts, m, state.total + w, VAR_FLOOR, GAP_FLOOR
        )
        xs = evaluator.sample(np.full(w, j, dtype=np.int64), rng)
        for x in xs:
            _kernels.welford_one(state.means, state._comp, state.counts, m2, j, float(x))
        state.total += w
        rest -= w
    return SelectionResult.from_state(state, m)
