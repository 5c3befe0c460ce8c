"""Boundary-crossing quantities computed offline from recorded observation streams.

These functions replay a fixed stream of observations and report where its
running average first falls to a boundary, where it attains its minimum, and
when it last leaves a band around its mean. All quantities are taken over the
finite horizon of the stream, which is flagged in every result; tests that need
exact infinite-horizon values use constructed streams where the two coincide.

Running averages are accumulated with the same compensated update the
algorithms use, so comparisons against replayed runs are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from numba import njit

from . import _kernels
from .core import GoodSet

INCONCLUSIVE = "inconclusive"


@njit(cache=True)
def _running_average(values):
    n = values.shape[0]
    means = np.zeros(1)
    comp = np.zeros(1)
    counts = np.zeros(1, dtype=np.int64)
    out = np.empty(n)
    for j in range(n):
        _kernels.update_one(means, comp, counts, 0, values[j])
        out[j] = means[0]
    return out


def running_average(values) -> np.ndarray:
    """Running averages ``X(1), ..., X(H)`` of ``values``."""
    return _running_average(np.ascontiguousarray(values, dtype=np.float64))


@dataclass
class StreamAnalysis:
    """Finite-horizon boundary-crossing summary of one stream.

    Sample sizes ``n`` are 1-based: ``running[n - 1]`` is the average of the
    first ``n`` values. ``crossing_times[b]`` is ``None`` when the stream does
    not reach ``b`` by the horizon; ``last_exit[r]`` is ``None`` when the
    running average stays strictly inside the band from ``n0`` on, and
    ``exit_beyond_horizon[r]`` marks bands the average is still outside of
    at the horizon.
    """

    running: np.ndarray = field(repr=False)
    n0: int
    mu: Optional[float]
    min_running_avg: float
    argmin_index: int
    crossing_times: Dict[float, Optional[int]]
    last_exit: Dict[float, Optional[int]]
    exit_beyond_horizon: Dict[float, bool]
    finite_horizon: bool = True

    @property
    def horizon(self) -> int:
        return int(self.running.shape[0])


def first_crossing(running, n0, boundary) -> Optional[int]:
    """First 1-based ``n >= n0`` with ``running[n - 1] <= boundary``."""
    hits = np.flatnonzero(running[n0 - 1:] <= boundary)
    return int(hits[0]) + n0 if hits.size else None


def analyze_stream(values, n0: int, mu: Optional[float] = None, boundaries=(), radii=()):
    """Scan a stream for its minimum, boundary crossings and last exits.

    Parameters
    ----------
    values : array-like of shape (H,)
    n0 : int
        First sample size considered, ``1 <= n0 <= H``.
    mu : float, optional
        Centre of the bands used for last-exit times; required when
        ``radii`` is nonempty.
    boundaries, radii : iterable of float

    Returns
    -------
    StreamAnalysis
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("stream must be a nonempty 1-d sequence")
    H = values.shape[0]
    if not 1 <= n0 <= H:
        raise ValueError(f"need 1 <= n0 <= H, got n0={n0}, H={H}")
    radii = list(radii)
    if radii and mu is None:
        raise ValueError("last-exit times need the stream mean mu")
    run = running_average(values)
    tail = run[n0 - 1:]
    j = int(np.argmin(tail))
    crossings = {float(b): first_crossing(run, n0, b) for b in boundaries}
    last_exit, beyond = {}, {}
    for r in radii:
        outside = np.flatnonzero(np.abs(tail - mu) >= r)
        last_exit[float(r)] = int(outside[-1]) + n0 if outside.size else None
        beyond[float(r)] = bool(outside.size and outside[-1] == tail.shape[0] - 1)
    return StreamAnalysis(
        running=run,
        n0=int(n0),
        mu=mu,
        min_running_avg=float(tail[j]),
        argmin_index=j + n0,
        crossing_times=crossings,
        last_exit=last_exit,
        exit_beyond_horizon=beyond,
    )


def ordered_good_minima(analyses, m: int) -> float:
    """The m-th largest minimum running average among the good alternatives."""
    if m < 1 or m > len(analyses):
        raise ValueError(f"need 1 <= m <= {len(analyses)}, got m={m}")
    minima = sorted((a.min_running_avg for a in analyses), reverse=True)
    return float(minima[m - 1])


def sufficient_budget_for_good_screening(analyses, good: GoodSet, n0: int, m: int):
    """Greedy budget that guarantees EFG-m screens into ``good`` on these streams.

    The boundary is the m-th largest good minimum. Every inferior alternative
    stops being sampled once its running average reaches the boundary and
    every good alternative once it attains its minimum, so after
    ``sum(N_i) + sum(argmin_j) - n0 k`` rounds of ``m`` observations the
    current top-m lies inside the good set.

    Parameters
    ----------
    analyses : list of StreamAnalysis
        One per alternative, indexed by alternative.
    good : GoodSet
    n0, m : int

    Returns
    -------
    int or ``INCONCLUSIVE``
        Inconclusive when an inferior stream never reaches the boundary or a
        good stream attains its minimum only at the horizon.
    """
    k = len(analyses)
    members = sorted(good.members)
    if len(members) < m:
        raise ValueError("the good set has fewer than m members")
    boundary = ordered_good_minima([analyses[j] for j in members], m)
    total = 0
    for i, a in enumerate(analyses):
        if a.n0 != n0:
            raise ValueError(f"analysis {i} was computed with n0={a.n0}, not {n0}")
        if i in good.members:
            if a.argmin_index >= a.horizon:
                return INCONCLUSIVE
            total += a.argmin_index
        else:
            n_i = first_crossing(a.running, n0, boundary)
            if n_i is None:
                return INCONCLUSIVE
            total += n_i
    return int(m * max(0, total - n0 * k))


@dataclass
class CBoundaryEstimate:
    z: float
    n0: int
    reps: int
    horizon: int
    estimate: float
    standard_error: float
    truncation_fraction: float


def estimate_C(z: float, n0: int, reps: int = 10_000, horizon: int = 1_000_000, rng=None,
               block: int = 256) -> CBoundaryEstimate:
    """Monte Carlo mean of the first ``n >= n0`` at which a standard normal
    running average drops to ``z`` or below.

    Paths that stay above ``z`` through ``horizon`` contribute ``horizon``,
    which biases the estimate downward; ``truncation_fraction`` reports how
    often that happened.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    if n0 < 1 or reps < 1 or horizon < n0:
        raise ValueError("need n0 >= 1, reps >= 1 and horizon >= n0")
    rng = np.random.default_rng(rng)
    sums = rng.standard_normal((reps, n0)).sum(axis=1)
    times = np.full(reps, horizon, dtype=np.int64)
    hit = sums / n0 <= z
    times[hit] = n0
    active = np.flatnonzero(~hit)
    n = n0
    while active.size and n < horizon:
        width = min(block, horizon - n)
        steps = n + 1 + np.arange(width)
        paths = sums[active, None] + np.cumsum(rng.standard_normal((active.size, width)), axis=1)
        below = paths <= z * steps
        crossed = below.any(axis=1)
        first = below.argmax(axis=1)
        times[active[crossed]] = steps[first[crossed]]
        sums[active] = paths[:, -1]
        active = active[~crossed]
        n += width
    est = float(times.mean())
    se = float(times.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return CBoundaryEstimate(
        z=float(z),
        n0=int(n0),
        reps=int(reps),
        horizon=int(horizon),
        estimate=est,
        standard_error=se,
        truncation_fraction=float(active.size / reps),
    )


def crossing_excess_bound(b: float, n0: int) -> float:
    """``beta * exp(-kappa n0)`` with ``kappa = b^2 / 2`` and ``beta = 1 / (1 - exp(-kappa))``."""
    kappa = b * b / 2.0
    return math.exp(-kappa * n0) / (1.0 - math.exp(-kappa))
