"""Simulation-based redundancy allocation on a seven-subsystem network.

An alternative is an allocation ``x`` of standby components to the seven
subsystems. Subsystem ``i`` lives for the sum of ``x[i]`` independent
lognormal component lifetimes; a path lives as long as its weakest subsystem
and the system as long as its best path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from ..exceptions import ConfigurationError
from .base import Evaluator

N_SUBSYSTEMS = 7

DEFAULT_LOG_MEANS = (0.1, 0.2, 0.3, 0.2, 0.1, 0.2, 0.3)
DEFAULT_LOG_SDS = (1.5,) * N_SUBSYSTEMS

# Six minimal paths over the seven subsystems (0-based). The source network
# figure is not reproduced in text form; this incidence is a documented
# default and results on it are structure-dependent.
DEFAULT_PATHS = (
    (0, 1, 2),
    (0, 3, 6),
    (4, 5, 6),
    (4, 3, 2),
    (0, 3, 2),
    (4, 3, 6),
)


def enumerate_allocations(L: int, mode: str = "at_most") -> np.ndarray:
    """All allocations ``x`` in N+^7 with ``sum(x) <= L`` (or ``== L``).

    Returns an int64 array of shape (n, 7) in lexicographic order. With
    ``mode="at_most"`` the count is ``C(L, 7)``; with ``mode="exact"`` it is
    ``C(L - 1, 6)``.
    """
    if mode not in ("at_most", "exact"):
        raise ConfigurationError(f"unknown feasibility mode {mode!r}")
    if L < N_SUBSYSTEMS:
        raise ConfigurationError(f"L={L} admits no allocation with every subsystem >= 1")
    n = N_SUBSYSTEMS
    # Stars and bars: cut points on 1..L (at_most) or 1..L-1 (exact).
    span = L if mode == "at_most" else L - 1
    parts = n if mode == "at_most" else n - 1
    rows = []
    for cuts in itertools.combinations(range(1, span + 1), parts):
        edges = (0,) + cuts
        x = [edges[i + 1] - edges[i] for i in range(parts)]
        if mode == "exact":
            x.append(L - cuts[-1])
        rows.append(x)
    return np.array(rows, dtype=np.int64)


@njit(cache=True)
def _lifetimes(alloc, alts, incidence, log_means, log_sds, z):
    n_paths, n_sub = incidence.shape
    out = np.empty(alts.shape[0])
    life = np.empty(n_sub)
    pos = 0
    for j in range(alts.shape[0]):
        a = alts[j]
        for i in range(n_sub):
            s = 0.0
            for _ in range(alloc[a, i]):
                s += np.exp(log_means[i] + log_sds[i] * z[pos])
                pos += 1
            life[i] = s
        best = -np.inf
        for p in range(n_paths):
            worst = np.inf
            for i in range(n_sub):
                if incidence[p, i] and life[i] < worst:
                    worst = life[i]
            if worst > best:
                best = worst
        out[j] = best
    return out


@dataclass
class RedundancyProblem:
    L: int = 13
    log_means: tuple = DEFAULT_LOG_MEANS
    log_sds: tuple = DEFAULT_LOG_SDS
    paths: tuple = DEFAULT_PATHS
    mode: str = "at_most"
    allocations: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.log_means) != len(self.log_sds):
            raise ConfigurationError("log_means and log_sds differ in length")
        if not self.paths:
            raise ConfigurationError("the network needs at least one path")
        if self.allocations is None:
            self.allocations = enumerate_allocations(self.L, self.mode)
        self.allocations = np.asarray(self.allocations, dtype=np.int64)
        if np.any(self.allocations < 1):
            raise ConfigurationError("every allocation entry must be >= 1")
        n_sub = len(self.log_means)
        inc = np.zeros((len(self.paths), n_sub), dtype=np.bool_)
        for p, nodes in enumerate(self.paths):
            if not nodes:
                raise ConfigurationError(f"path {p} is empty")
            for i in nodes:
                if not 0 <= i < n_sub:
                    raise ConfigurationError(f"path {p} names unknown subsystem {i}")
                inc[p, i] = True
        self.incidence = inc

    @property
    def k(self):
        return self.allocations.shape[0]


class RedundancyEvaluator(Evaluator):
    """One system-lifetime draw per requested allocation."""

    def __init__(self, problem: RedundancyProblem):
        self.problem = problem
        self._mu = np.asarray(problem.log_means, dtype=float)
        self._sd = np.asarray(problem.log_sds, dtype=float)
        self._n_components = problem.allocations.sum(axis=1)
        self.description = f"redundancy(L={problem.L}, k={problem.k})"

    @property
    def n_alternatives(self):
        return self.problem.k

    def sample(self, alts, rng):
        alts = np.asarray(alts, dtype=np.int64)
        z = rng.standard_normal(int(self._n_components[alts].sum()))
        p = self.problem
        return _lifetimes(p.allocations, alts, p.incidence, self._mu, self._sd, z)


def sample_redundancy(problem: RedundancyProblem, alloc_index: int, rng) -> float:
    """A single system-lifetime draw for allocation ``alloc_index``."""
    if not 0 <= alloc_index < problem.k:
        raise IndexError(f"allocation {alloc_index} out of range [0, {problem.k})")
    return RedundancyEvaluator(problem).sample_one(alloc_index, rng)
