"""Macro-replication runner, metric aggregation and parameter sweeps."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..algorithms import ComparatorParams, EfgParams, consistent_budget, plan_for, run_algorithm
from ..core import (
    BudgetPlan,
    SelectionResult,
    good_set,
    is_correct_selection,
    is_good_ranking,
    is_good_screening,
)
from ..exceptions import ConfigurationError
from ..parallel import run_parallel
from .config import ExperimentConfig
from .truth import build_problem, true_means_for

log = logging.getLogger(__name__)

CSV_COLUMNS = ("config_digest", "axis_value", "metric", "estimate", "se", "R", "wall_clock_ms")
SWEEP_AXES = ("k", "c", "alpha", "delta", "sigma", "m", "M_ratio", "q")


def score_replication(result: SelectionResult, true_means, m: int, delta: float):
    """``(correct, good_screen, good_rank)`` for one terminal selection.

    ``good_rank`` is the joint event: it holds only when the screening is
    good and, in addition, the selected alternatives are ranked correctly.
    """
    if len(result.selected) != m:
        raise ValueError(f"selection has {len(result.selected)} entries, expected {m}")
    correct = is_correct_selection(result, true_means)
    good = is_good_screening(result, good_set(true_means, m, delta))
    rank = good and is_good_ranking(result, true_means, delta)
    return bool(correct), bool(good), bool(rank)


@dataclass
class ReplicationReport:
    """Aggregate of one metric over ``R`` replications.

    For the probability metrics ``standard_error = sqrt(p (1 - p) / R)``.
    """

    metric: str
    estimate: float
    standard_error: float
    R: int
    wall_clock_ms: float
    config_digest: str
    seed: int
    axis_value: Optional[object] = None

    def csv_row(self):
        axis = "" if self.axis_value is None else self.axis_value
        return [self.config_digest, axis, self.metric, repr(self.estimate),
                repr(self.standard_error), self.R, f"{self.wall_clock_ms:.3f}"]


@dataclass
class ReplicationRecord:
    r: int
    selected: List[int]
    correct: bool
    good: bool
    good_rank: bool
    consumed: int
    wall_ms: float
    utilization: Optional[float] = None


def replication_seed(master: int, r: int) -> np.random.SeedSequence:
    """Seed of replication ``r``; independent of how replications are scheduled."""
    return np.random.SeedSequence(int(master), spawn_key=(int(r),))


def budget_for(config: ExperimentConfig, k: int, m: int):
    """Total budget (int) or explicit :class:`BudgetPlan` for ``k`` alternatives."""
    b = config.budget
    if b.rule == "per_alt":
        return int(round(b.c * k))
    if b.rule == "total":
        return int(b.total)
    n0, ng = consistent_budget(b.alpha, b.sigma_bar, config.problem.delta, m)
    return BudgetPlan(total=(n0 + ng) * k, seeding_per_alt=0, explore_per_alt=n0, greedy_total=ng * k)


class _Context:
    """Everything a replication needs that does not depend on ``r``."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        spec = config.problem
        self.problem, self.evaluator = build_problem(spec)
        self.truth = None if spec.redraw_means else true_means_for(spec, self.problem)


_CONTEXTS: Dict[str, _Context] = {}


def _context(config: ExperimentConfig) -> _Context:
    key = config.digest()
    if key not in _CONTEXTS:
        _CONTEXTS.clear()
        _CONTEXTS[key] = _Context(config)
    return _CONTEXTS[key]


def run_replication(config: ExperimentConfig, r: int) -> ReplicationRecord:
    ctx = _context(config)
    spec, alg, par = config.problem, config.algorithm, config.parallel
    means_ss, run_ss = replication_seed(config.seed, r).spawn(2)
    problem, evaluator = ctx.problem, ctx.evaluator
    if spec.redraw_means:
        problem, evaluator = build_problem(spec, np.random.default_rng(means_ss))
        truth = problem.true_means
    else:
        truth = ctx.truth.means
    budget = budget_for(config, problem.k, problem.m)
    M = alg.width(problem.m)
    t0 = time.perf_counter()
    util = None
    if par.workers:
        plan = budget if isinstance(budget, BudgetPlan) else plan_for(
            alg.name, problem.k, budget, config.budget.greedy_fraction, config.budget.seeding_fraction
        )
        params = EfgParams(
            m=problem.m,
            M=problem.m if alg.name == "efg_m" else M,
            greedy_fraction=config.budget.greedy_fraction,
            seeding_fraction=config.budget.seeding_fraction if alg.name == "efg_M_plus" else 0.0,
            group_count_override=alg.group_count,
        )
        rep = run_parallel(
            problem, evaluator, plan, params, q=par.workers, latency_max=par.latency_ms_max / 1000.0,
            seed=int(run_ss.generate_state(1, np.uint64)[0]), mode=par.mode, staleness=par.staleness,
        )
        result, util = rep.selection, float(rep.utilization)
    else:
        result = run_algorithm(
            alg.name, problem, evaluator, budget,
            M=M,
            greedy_fraction=config.budget.greedy_fraction,
            seeding_fraction=config.budget.seeding_fraction,
            group_count=alg.group_count,
            comparator=ComparatorParams(alg.ocbam_n1_fraction, alg.ocbam_batch),
            seed=np.random.default_rng(run_ss),
        )
    wall = (time.perf_counter() - t0) * 1000.0
    correct, good, rank = score_replication(result, truth, problem.m, spec.delta)
    return ReplicationRecord(
        r=int(r),
        selected=[int(i) for i in result.selected],
        correct=correct,
        good=good,
        good_rank=rank,
        consumed=int(result.consumed_budget),
        wall_ms=wall,
        utilization=util,
    )


def _run_chunk(config_dict, indices):
    config = ExperimentConfig.from_dict(config_dict)
    return [run_replication(config, r) for r in indices]


def run_replications(config: ExperimentConfig, jobs: int = 1) -> List[ReplicationRecord]:
    """All ``R`` replications, ordered by index whatever ``jobs`` is."""
    R = config.replications
    if jobs <= 1 or R == 1:
        return [run_replication(config, r) for r in range(R)]
    # Build shared artifacts (such as cached true means) once, up front.
    _context(config)
    chunks = [list(range(j, R, jobs)) for j in range(jobs)]
    data = config.to_dict()
    with ProcessPoolExecutor(jobs) as pool:
        parts = list(pool.map(_run_chunk, [data] * len(chunks), chunks))
    records = [rec for part in parts for rec in part]
    records.sort(key=lambda rec: rec.r)
    return records


def aggregate(records: Sequence[ReplicationRecord], config: ExperimentConfig, axis_value=None):
    R = len(records)
    wall = float(np.mean([rec.wall_ms for rec in records]))
    digest = config.digest()
    columns = {
        "PCS": [rec.correct for rec in records],
        "PGS": [rec.good for rec in records],
        "PGSR": [rec.good_rank for rec in records],
    }
    reports = []
    for metric in config.metrics:
        p = float(np.mean(columns[metric]))
        se = math.sqrt(p * (1.0 - p) / R)
        reports.append(ReplicationReport(metric, p, se, R, wall, digest, config.seed, axis_value))
    utils = [rec.utilization for rec in records if rec.utilization is not None]
    if utils:
        u = np.asarray(utils)
        se = float(u.std(ddof=1) / math.sqrt(u.size)) if u.size > 1 else float("nan")
        reports.append(ReplicationReport("utilization", float(u.mean()), se, R, wall, digest,
                                         config.seed, axis_value))
    return reports


def write_csv(reports: Sequence[ReplicationReport], path, append: bool = False):
    """Write result rows; a header is written whenever the file is new or truncated."""
    fresh = not append or not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a" if append else "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(CSV_COLUMNS)
        for rep in reports:
            w.writerow(rep.csv_row())


def audit_path(csv_path) -> str:
    root, _ = os.path.splitext(os.fspath(csv_path))
    return root + ".jsonl"


def write_audit(records, config: ExperimentConfig, path, axis_value=None, append=False):
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"config": config.to_dict(), "config_digest": config.digest(),
                             "axis_value": axis_value}) + "\n")
        for rec in records:
            fh.write(json.dumps({"config_digest": config.digest(), "axis_value": axis_value,
                                 **asdict(rec)}) + "\n")


def run_experiment(config: ExperimentConfig, jobs: int = 1, axis_value=None,
                   append: bool = False) -> List[ReplicationReport]:
    """Run ``config.replications`` independent replications and aggregate.

    Replication ``r`` draws everything from ``SeedSequence(seed, spawn_key=(r,))``,
    so results do not depend on ``jobs``. When ``config.output`` is set, rows
    go to that CSV and per-replication records to a JSONL file beside it.

    Raises
    ------
    ConfigurationError
        When the problem has no means to score against; raised before any
        replication runs.
    """
    _context(config)
    records = run_replications(config, jobs)
    reports = aggregate(records, config, axis_value)
    if config.output:
        os.makedirs(os.path.dirname(os.path.abspath(config.output)), exist_ok=True)
        write_csv(reports, config.output, append=append)
        write_audit(records, config, audit_path(config.output), axis_value, append=append)
    return reports


def _apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    spec, alg, budget = config.problem, config.algorithm, config.budget
    if axis == "k":
        if spec.kind != "synthetic":
            raise ConfigurationError("the k axis applies to synthetic problems only")
        return config.replace(**{"problem.k": int(value)})
    if axis == "c":
        if budget.rule != "per_alt":
            raise ConfigurationError("the c axis needs the per_alt budget rule")
        return config.replace(**{"budget.c": float(value)})
    if axis == "alpha":
        if budget.rule != "consistent":
            raise ConfigurationError("the alpha axis needs the consistent budget rule")
        return config.replace(**{"budget.alpha": float(value)})
    if axis == "delta":
        return config.replace(**{"problem.delta": float(value)})
    if axis == "sigma":
        if spec.kind != "synthetic" or not spec.preset.endswith("Normal") or "Log" in spec.preset:
            raise ConfigurationError("the sigma axis applies to normal synthetic problems only")
        from ..evaluators.synthetic import PRESETS

        mean = (spec.base_params or PRESETS[spec.preset][2])[0]
        return config.replace(**{"problem.base_params": [float(mean), float(value)],
                                 "budget.sigma_bar": float(value)})
    if axis == "m":
        return config.replace(**{"problem.m": int(value)})
    if axis == "M_ratio":
        if alg.name not in ("efg_M", "efg_M_plus", "sar_M"):
            raise ConfigurationError(f"the M_ratio axis does not apply to {alg.name}")
        return config.replace(**{"algorithm.M": None, "algorithm.M_ratio": float(value)})
    if axis == "q":
        return config.replace(**{"parallel.workers": int(value)})
    raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(config: ExperimentConfig, axis: str, values, jobs: int = 1) -> List[ReplicationReport]:
    """One experiment per axis value; rows from all values share one CSV."""
    configs = [_apply_axis(config, axis, v) for v in values]
    reports = []
    for i, (value, cfg) in enumerate(zip(values, configs)):
        log.info("sweep %s=%s", axis, value)
        reports.extend(run_experiment(cfg, jobs, axis_value=value, append=i > 0))
    return reports
