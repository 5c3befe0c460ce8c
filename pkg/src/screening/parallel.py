"""Asynchronous EFG-M+ with a coordinator and a pool of ``q`` workers.

Seeding and exploration are static task lists spread over the workers, with
a barrier after each. In the greedy phase the coordinator keeps a FIFO task
queue: it starts with ``q`` copies of the current top-M and, whenever a worker
finds the queue empty, refills it with the top-M under the latest means. Top-M
sets may therefore be computed from slightly stale statistics while other
tasks are in flight.

Two execution modes share these rules:

``"simulated"``
    A discrete-event clock. Each task occupies its worker for a latency drawn
    from Uniform(0, ``latency_max``); no real time passes. The whole run is
    compiled, so hundreds of replications at ``k`` in the thousands are cheap.
``"threaded"``
    Real worker threads that sleep for their latency, measured with a
    wall clock.

Observation ``n`` of alternative ``i`` is ``value(key, i, n)`` in both modes
(see :mod:`screening.evaluators.keyed`), so the only difference between
``q`` workers and one is the order in which statistics are updated.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import _kernels
from .algorithms._common import EfgParams
from .algorithms.efg import seeded_ranking, seeding_plan
from .core import BudgetPlan, SampleState, SelectionResult
from .evaluators.keyed import KeyedEvaluator, keyed_base, keyed_uniform
from .exceptions import ConfigurationError, ScreeningError

PHASES = ("seeding", "exploration", "greedy", "done")


class CoordinatorState:
    """Single-writer bookkeeping for an asynchronous greedy phase.

    Issued tasks are counted against the budget when issued; a task dropped
    for staleness returns its unit. At all times
    ``completed + in_flight + remaining_budget == budget``.

    Parameters
    ----------
    state : SampleState
        Statistics the greedy phase reads and updates.
    width : int
        Greedy width ``M``.
    budget : int
        Observations the phase may issue.
    keep_log : bool
        Record every issue as ``(alt, reports_at_issue)``.
    """

    def __init__(self, state: SampleState, width: int, budget: int, keep_log: bool = False):
        self.state = state
        self.width = int(width)
        self.budget = int(budget)
        self.remaining_budget = int(budget)
        self.in_flight = 0
        self.completed = 0
        self.phase = "greedy" if budget > 0 else "done"
        self.pending = np.zeros(state.k, dtype=np.int64)
        self.issued_log = [] if keep_log else None

    def next_tasks(self, batch: int) -> list:
        """Up to ``batch`` alternatives from the current top-M, clipped to the budget."""
        if self.phase != "greedy":
            raise ScreeningError(f"next_tasks called in phase {self.phase!r}")
        if batch < 1:
            raise ValueError("batch must be positive")
        n = min(batch, self.width, self.remaining_budget)
        if n == 0:
            return []
        sel = [int(a) for a in _kernels.top_indices(self.state.means, self.width)[:n]]
        for a in sel:
            self.pending[a] += 1
        self.remaining_budget -= n
        self.in_flight += n
        if self.issued_log is not None:
            self.issued_log.extend((a, self.completed) for a in sel)
        return sel

    def drop(self, alt: int) -> "CoordinatorState":
        """Withdraw an issued task that was never started; its budget unit returns."""
        self._release(alt)
        self.remaining_budget += 1
        return self

    def report(self, alt: int, value: float) -> "CoordinatorState":
        """Fold one returned observation into the statistics."""
        self._release(alt)
        self.completed += 1
        self.state.update(alt, value)
        if self.remaining_budget == 0 and self.in_flight == 0:
            self.phase = "done"
        return self

    def _release(self, alt):
        if not 0 <= alt < self.state.k or self.pending[alt] == 0:
            raise ScreeningError(f"alternative {alt} has no task in flight")
        self.pending[alt] -= 1
        self.in_flight -= 1

    def check_accounting(self):
        if self.completed + self.in_flight + self.remaining_budget != self.budget:
            raise ScreeningError("task accounting does not add up to the budget")


@dataclass
class ParallelReport:
    """Outcome of one asynchronous run.

    ``speedup`` is ``baseline_wall_clock / wall_clock`` and ``utilization``
    is ``speedup / q``.
    """

    wall_clock: float
    speedup: float
    utilization: float
    q: int
    selection: SelectionResult
    baseline_wall_clock: float
    mode: str
    overlapping_issues: int = 0
    dropped_stale: int = 0
    issued_log: Optional[list] = field(default=None, repr=False)


# --------------------------------------------------------------------------
# simulated clock


@njit(cache=True)
def _sim_static(alts, code, p1, p2, key, offsets, drawn, lat_key, serial, lat_max, q, t0,
                means, comp, counts):
    free = np.full(q, t0)
    for j in range(alts.shape[0]):
        w = 0
        for i in range(1, q):
            if free[i] < free[w]:
                w = i
        a = alts[j]
        x = keyed_base(code, p1, p2, key, a, drawn[a]) + offsets[a]
        drawn[a] += 1
        free[w] += lat_max * keyed_uniform(lat_key, 0, serial, 0)
        serial += 1
        if counts[a] == 0:
            means[a] = 0.0
        _kernels.update_one(means, comp, counts, a, x)
    end = t0
    for i in range(q):
        if free[i] > end:
            end = free[i]
    return end, serial


@njit(cache=True)
def _sim_greedy(code, p1, p2, key, offsets, drawn, lat_key, serial, lat_max, q, width, budget,
                staleness, t0, means, comp, counts, log_alt, log_draw):
    # Task queue as a ring buffer: entries hold (alt, report count at issue).
    cap = q * width + width + 1
    qa = np.empty(cap, dtype=np.int64)
    qs = np.empty(cap, dtype=np.int64)
    head = 0
    size = 0
    remaining = budget
    reports = 0
    dropped = 0
    overlaps = 0
    issued = 0
    busy = np.zeros(q, dtype=np.bool_)
    finish = np.zeros(q)
    w_alt = np.zeros(q, dtype=np.int64)
    w_val = np.zeros(q)
    inflight = np.zeros(means.shape[0], dtype=np.int64)

    # q initial batches of top-M.
    for _ in range(q):
        n = min(width, remaining)
        if n == 0:
            break
        sel = _kernels.top_indices(means, width)
        for j in range(n):
            qa[(head + size) % cap] = sel[j]
            qs[(head + size) % cap] = 0
            size += 1
        remaining -= n

    now = t0
    # Start every worker.
    for w in range(q):
        while size > 0 and not busy[w]:
            a = qa[head]
            stamp = qs[head]
            head = (head + 1) % cap
            size -= 1
            if staleness >= 0 and reports - stamp > staleness:
                remaining += 1
                dropped += 1
                continue
            if inflight[a] > 0:
                overlaps += 1
            inflight[a] += 1
            w_val[w] = keyed_base(code, p1, p2, key, a, drawn[a]) + offsets[a]
            log_alt[issued] = a
            log_draw[issued] = drawn[a]
            issued += 1
            drawn[a] += 1
            w_alt[w] = a
            finish[w] = now + lat_max * keyed_uniform(lat_key, 0, serial, 0)
            serial += 1
            busy[w] = True

    while True:
        w = -1
        for i in range(q):
            if busy[i] and (w < 0 or finish[i] < finish[w]):
                w = i
        if w < 0:
            break
        now = finish[w]
        busy[w] = False
        a = w_alt[w]
        inflight[a] -= 1
        _kernels.update_one(means, comp, counts, a, w_val[w])
        reports += 1
        while not busy[w]:
            if size == 0:
                n = min(width, remaining)
                if n == 0:
                    break
                sel = _kernels.top_indices(means, width)
                for j in range(n):
                    qa[(head + size) % cap] = sel[j]
                    qs[(head + size) % cap] = reports
                    size += 1
                remaining -= n
            a = qa[head]
            stamp = qs[head]
            head = (head + 1) % cap
            size -= 1
            if staleness >= 0 and reports - stamp > staleness:
                remaining += 1
                dropped += 1
                continue
            if inflight[a] > 0:
                overlaps += 1
            inflight[a] += 1
            w_val[w] = keyed_base(code, p1, p2, key, a, drawn[a]) + offsets[a]
            log_alt[issued] = a
            log_draw[issued] = drawn[a]
            issued += 1
            drawn[a] += 1
            w_alt[w] = a
            finish[w] = now + lat_max * keyed_uniform(lat_key, 0, serial, 0)
            serial += 1
            busy[w] = True
    return now, serial, issued, overlaps, dropped


def _phase_plan(problem, plan, params):
    k, m = problem.k, problem.m
    width = params.width(2)
    if width > k:
        raise ConfigurationError(f"greedy width {width} exceeds k={k}")
    sp = None
    if plan.seeding_per_alt > 0:
        sp = seeding_plan(k, m, plan.explore_per_alt, params.group_count_override)
        spend = k * plan.seeding_per_alt + sp.cost
    else:
        spend = k * plan.explore_per_alt
    if spend > plan.total:
        raise ConfigurationError(f"static phases need {spend} > budget {plan.total}")
    return width, sp, plan.total - spend


def _exploration_reps(k, plan, sp, seed_means):
    if sp is None:
        return np.full(k, plan.explore_per_alt, dtype=np.int64)
    ranking = seeded_ranking(seed_means)
    reps = np.empty(k, dtype=np.int64)
    for (lo, hi), n_r in zip(sp.group_ranges, sp.per_group_sample):
        reps[ranking[lo:hi]] = n_r
    return reps


def _simulate(problem, keyed, plan, params, q, latency_max, staleness, keep_log):
    k, m = problem.k, problem.m
    width, sp, greedy = _phase_plan(problem, plan, params)
    code, p1, p2, offsets = keyed.code, keyed.p1, keyed.p2, keyed.offsets
    key = keyed.key
    lat_key = np.uint64((int(key) * 0x2545F4914F6CDD1D + 0x632BE59BD9B4E019) & 0xFFFFFFFFFFFFFFFF)
    drawn = np.zeros(k, dtype=np.int64)
    serial = 0
    t = 0.0
    seed_total = 0
    if sp is not None:
        seed_state = SampleState(k)
        alts = np.repeat(np.arange(k), plan.seeding_per_alt)
        t, serial = _sim_static(alts, code, p1, p2, key, offsets, drawn, lat_key, serial,
                                latency_max, q, t, seed_state.means, seed_state._comp,
                                seed_state.counts)
        seed_state.total = alts.shape[0]
        seed_total = seed_state.total
        reps = _exploration_reps(k, plan, sp, seed_state.means)
    else:
        reps = _exploration_reps(k, plan, None, None)
    state = SampleState(k)
    alts = np.repeat(np.arange(k), reps)
    t, serial = _sim_static(alts, code, p1, p2, key, offsets, drawn, lat_key, serial,
                            latency_max, q, t, state.means, state._comp, state.counts)
    state.total = alts.shape[0]
    log_alt = np.empty(greedy, dtype=np.int64)
    log_draw = np.empty(greedy, dtype=np.int64)
    t, serial, issued, overlaps, dropped = _sim_greedy(
        code, p1, p2, key, offsets, drawn, lat_key, serial, latency_max, q, width, greedy,
        -1 if staleness is None else int(staleness), t, state.means, state._comp, state.counts,
        log_alt, log_draw,
    )
    state.total += issued
    if issued != greedy:
        raise ScreeningError(f"greedy phase issued {issued} of {greedy} observations")
    result = SelectionResult.from_state(state, m, consumed=seed_total + state.total)
    log = list(zip(log_alt.tolist(), log_draw.tolist())) if keep_log else None
    return t, result, overlaps, dropped, log


# --------------------------------------------------------------------------
# real threads


def _threaded(problem, keyed, plan, params, q, latency_max, staleness, keep_log, seed):
    from collections import deque

    k, m = problem.k, problem.m
    width, sp, greedy = _phase_plan(problem, plan, params)
    lat_rng = np.random.default_rng(seed)
    tasks: queue.Queue = queue.Queue()
    results: queue.Queue = queue.Queue()

    def worker():
        while True:
            item = tasks.get()
            if item is None:
                return
            alt, draw, delay = item
            try:
                time.sleep(delay)
                results.put((alt, keyed.value(alt, draw), None))
            except Exception as exc:  # handed to the coordinator, which aborts
                results.put((alt, None, exc))

    threads = [threading.Thread(target=worker, daemon=True) for _ in range(q)]
    for th in threads:
        th.start()
    drawn = np.zeros(k, dtype=np.int64)
    log = [] if keep_log else None

    def start(alt):
        tasks.put((alt, int(drawn[alt]), float(lat_rng.uniform(0.0, latency_max))))
        if log is not None:
            log.append((alt, int(drawn[alt])))
        drawn[alt] += 1

    def collect():
        alt, x, exc = results.get()
        if exc is not None:
            raise ScreeningError(f"worker failed on alternative {alt}: {exc!r}") from exc
        return alt, x

    def static(state, alts):
        for a in alts:
            start(int(a))
        for _ in range(len(alts)):
            state.update(*collect())

    began = time.perf_counter()
    overlaps = dropped = 0
    try:
        seed_total = 0
        if sp is not None:
            seed_state = SampleState(k)
            static(seed_state, np.repeat(np.arange(k), plan.seeding_per_alt))
            seed_total = seed_state.total
            reps = _exploration_reps(k, plan, sp, seed_state.means)
        else:
            reps = _exploration_reps(k, plan, None, None)
        state = SampleState(k)
        if log is not None:
            log.clear()
        static(state, np.repeat(np.arange(k), reps))
        if log is not None:
            log.clear()

        coord = CoordinatorState(state, width, greedy)
        fifo = deque()
        running = np.zeros(k, dtype=np.int64)

        def refill():
            fifo.extend((a, coord.completed) for a in coord.next_tasks(width))

        def feed_one():
            nonlocal overlaps, dropped
            while True:
                if not fifo:
                    if coord.remaining_budget == 0:
                        return False
                    refill()
                a, stamp = fifo.popleft()
                if staleness is not None and coord.completed - stamp > staleness:
                    coord.drop(a)
                    dropped += 1
                    continue
                if running[a] > 0:
                    overlaps += 1
                running[a] += 1
                start(a)
                return True

        for _ in range(q):
            if coord.remaining_budget == 0:
                break
            refill()
        busy = sum(feed_one() for _ in range(q))
        while busy:
            a, x = collect()
            running[a] -= 1
            coord.report(a, x)
            busy -= 1
            busy += feed_one()
        coord.check_accounting()
    finally:
        for _ in threads:
            tasks.put(None)
        for th in threads:
            th.join(timeout=5.0)
    wall = time.perf_counter() - began
    result = SelectionResult.from_state(state, m, consumed=seed_total + state.total)
    return wall, result, overlaps, dropped, log


# --------------------------------------------------------------------------


def run_parallel(problem, evaluator, plan: BudgetPlan, params: EfgParams = None, q: int = 1,
                 latency_max: float = 1e-3, seed=0, mode: str = "simulated",
                 staleness: Optional[int] = None, baseline_wall_clock: Optional[float] = None,
                 keep_log: bool = False) -> ParallelReport:
    """Run asynchronous EFG-M+ (or EFG-M when ``plan.seeding_per_alt == 0``).

    Parameters
    ----------
    problem : ProblemInstance
    evaluator : SyntheticEvaluator, ConstantEvaluator or KeyedEvaluator
        Observations are taken from a keyed stream derived from ``seed``
        unless a :class:`KeyedEvaluator` is passed directly. In threaded
        mode any evaluator with a ``value(alt, n)`` method (such as
        :class:`~screening.llm.LlmEvaluator`) is queried as is.
    plan : BudgetPlan
    params : EfgParams, optional
    q : int
        Number of workers.
    latency_max : float
        Upper end, in seconds, of the Uniform(0, latency_max) task latency.
    seed : int
    mode : {"simulated", "threaded"}
    staleness : int, optional
        Drop queued greedy tasks issued more than this many reports ago.
        ``None`` never drops.
    baseline_wall_clock : float, optional
        Single-worker duration for the speedup; measured with ``q = 1``
        and the same seed when omitted.
    keep_log : bool
        Return the issued ``(alt, draw_index)`` log of the greedy phase.

    Returns
    -------
    ParallelReport
    """
    if q < 1:
        raise ConfigurationError("need at least one worker")
    if latency_max < 0:
        raise ConfigurationError("latency must be nonnegative")
    if staleness is not None and staleness < 0:
        raise ConfigurationError("staleness bound must be nonnegative")
    params = params or EfgParams(m=problem.m)
    if problem.k != evaluator.n_alternatives:
        raise ConfigurationError("problem and evaluator disagree on k")
    if isinstance(evaluator, KeyedEvaluator):
        keyed = evaluator
    elif mode == "threaded" and callable(getattr(evaluator, "value", None)):
        # Remote evaluators answer value(alt, n) themselves; n only labels the draw.
        keyed = evaluator
    else:
        keyed = KeyedEvaluator(evaluator, _key(seed))
    if mode == "simulated":
        run = lambda qq: _simulate(problem, keyed, plan, params, qq, latency_max, staleness, keep_log)
    elif mode == "threaded":
        run = lambda qq: _threaded(problem, keyed, plan, params, qq, latency_max, staleness,
                                   keep_log, seed)
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    wall, result, overlaps, dropped, log = run(q)
    if baseline_wall_clock is None:
        baseline_wall_clock = wall if q == 1 else run(1)[0]
    speedup = baseline_wall_clock / wall if wall > 0 else float("nan")
    return ParallelReport(
        wall_clock=wall,
        speedup=speedup,
        utilization=speedup / q,
        q=int(q),
        selection=result,
        baseline_wall_clock=baseline_wall_clock,
        mode=mode,
        overlapping_issues=int(overlaps),
        dropped_stale=int(dropped),
        issued_log=log,
    )


def _key(seed) -> int:
    ss = np.random.SeedSequence(seed)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def keyed_for_seed(evaluator, seed) -> KeyedEvaluator:
    """The keyed view of ``evaluator`` that :func:`run_parallel` uses for ``seed``."""
    return KeyedEvaluator(evaluator, _key(seed))
