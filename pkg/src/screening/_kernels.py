"""Compiled inner loops.

Everything here works on plain numpy arrays so it can be jitted with numba.
Public wrappers with validation live in :mod:`screening.core` and the
algorithm modules.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def top_indices(means, w):
    """Indices of the ``w`` largest entries, descending, lower index first on ties."""
    k = means.shape[0]
    idx = np.empty(w, dtype=np.int64)
    vals = np.empty(w, dtype=np.float64)
    size = 0
    for i in range(k):
        v = means[i]
        if size < w:
            p = size
            size += 1
        elif v > vals[w - 1]:
            p = w - 1
        else:
            continue
        while p > 0 and vals[p - 1] < v:
            vals[p] = vals[p - 1]
            idx[p] = idx[p - 1]
            p -= 1
        vals[p] = v
        idx[p] = i
    return idx


@njit(cache=True)
def update_one(means, comp, counts, i, x):
    # Kahan-compensated running mean.
    n = counts[i] + 1
    d = (x - means[i]) / n - comp[i]
    t = means[i] + d
    comp[i] = (t - means[i]) - d
    means[i] = t
    counts[i] = n


@njit(cache=True)
def update_many(means, comp, counts, alts, values):
    for j in range(alts.shape[0]):
        update_one(means, comp, counts, alts[j], values[j])


@njit(cache=True)
def greedy_location(means, comp, counts, offsets, pool, width):
    """Top-``width`` greedy rounds on a location family until ``pool`` is used up.

    Observation ``j`` of the phase is ``pool[j] + offsets[alt]``, consumed in
    selection order. The last round samples only the top ``len(pool) % width``.
    Returns the number of rounds (including a final partial one).
    """
    n = pool.shape[0]
    used = 0
    rounds = 0
    while used < n:
        w = min(width, n - used)
        sel = top_indices(means, width)
        for j in range(w):
            a = sel[j]
            update_one(means, comp, counts, a, pool[used] + offsets[a])
            used += 1
        rounds += 1
    return rounds


@njit(cache=True)
def welford_one(means, comp, counts, m2, i, x):
    old = means[i] if counts[i] > 0 else 0.0
    if counts[i] == 0:
        means[i] = 0.0
    update_one(means, comp, counts, i, x)
    m2[i] += (x - old) * (x - means[i])


@njit(cache=True)
def ocbam_pick(means, m2, counts, m, total_next, var_floor, gap_floor):
    """Most-starving alternative under the OCBAm allocation for ``total_next``.

    Allocation ratios are ``(s_i / (x_i - c))**2`` where ``c`` is the
    standard-deviation weighted midpoint of the m-th and (m+1)-th sample
    means. Returns the index with the largest ``target - count``; ties go to
    the lower index.
    """
    k = means.shape[0]
    top = top_indices(means, m + 1)
    a = top[m - 1]
    b = top[m]
    sa = np.sqrt(max(m2[a] / max(counts[a] - 1, 1), var_floor))
    sb = np.sqrt(max(m2[b] / max(counts[b] - 1, 1), var_floor))
    c = (sb * means[a] + sa * means[b]) / (sa + sb)
    ratio = np.empty(k)
    s = 0.0
    for i in range(k):
        var = max(m2[i] / max(counts[i] - 1, 1), var_floor)
        gap = abs(means[i] - c)
        if gap < gap_floor:
            gap = gap_floor
        r = var / (gap * gap)
        ratio[i] = r
        s += r
    best = 0
    best_short = -np.inf
    for i in range(k):
        short = total_next * ratio[i] / s - counts[i]
        if short > best_short:
            best_short = short
            best = i
    return best


@njit(cache=True)
def ocbam_location(means, comp, counts, m2, offsets, pool, m, batch, var_floor, gap_floor):
    """Sequential OCBAm phase on a location family, consuming ``pool`` in order."""
    n = pool.shape[0]
    used = 0
    total = 0
    for i in range(counts.shape[0]):
        total += counts[i]
    steps = 0
    while used < n:
        w = min(batch, n - used)
        j = ocbam_pick(means, m2, counts, m, total + w, var_floor, gap_floor)
        for _ in range(w):
            welford_one(means, comp, counts, m2, j, pool[used] + offsets[j])
            used += 1
        total += w
        steps += 1
    return steps
