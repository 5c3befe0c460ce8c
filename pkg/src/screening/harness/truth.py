"""Problem construction and the true-mean vectors used for scoring."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import ProblemInstance
from ..evaluators import (
    EmpiricalEvaluator,
    RedundancyEvaluator,
    RedundancyProblem,
    SyntheticConfig,
    build_synthetic,
    estimate_true_means,
    load_empirical,
)
from ..evaluators.redundancy import DEFAULT_PATHS
from ..exceptions import ConfigurationError
from .config import ProblemSpec

log = logging.getLogger(__name__)


@dataclass
class TrueMeans:
    """Means used for scoring; ``standard_errors`` is set when they are estimates."""

    means: np.ndarray
    standard_errors: Optional[np.ndarray] = None
    digest: str = ""
    source: str = "exact"


def synthetic_config(spec: ProblemSpec, rng=None) -> SyntheticConfig:
    overrides = dict(gamma_or_delta=spec.delta, m=spec.m, k=spec.k, g=spec.g, seed=spec.means_seed)
    cfg = SyntheticConfig.preset(spec.preset, **overrides)
    if spec.base_params is not None:
        cfg = SyntheticConfig(**{**cfg.to_dict(), "base_params": tuple(spec.base_params)})
    return cfg


def redundancy_problem(spec: ProblemSpec) -> RedundancyProblem:
    paths = tuple(tuple(p) for p in spec.paths) if spec.paths else DEFAULT_PATHS
    return RedundancyProblem(L=spec.L, paths=paths, mode=spec.mode)


def build_problem(spec: ProblemSpec, rng=None):
    """``(ProblemInstance, evaluator)`` for a problem spec.

    For synthetic problems with ``redraw_means`` the RM mean vector is drawn
    from ``rng``; otherwise it is fixed by ``means_seed``.
    """
    if spec.kind == "synthetic":
        cfg = synthetic_config(spec)
        ev, mu = build_synthetic(cfg, rng if spec.redraw_means else None)
        return ProblemInstance(k=cfg.k, m=cfg.m, delta=spec.delta, true_means=mu,
                               evaluator_id=spec.preset), ev
    if spec.kind == "redundancy":
        rp = redundancy_problem(spec)
        ev = RedundancyEvaluator(rp)
        return ProblemInstance(k=rp.k, m=spec.m, delta=spec.delta, evaluator_id=ev.description), ev
    data = load_empirical(spec.path)
    ev = EmpiricalEvaluator(data)
    return ProblemInstance(k=data.k, m=spec.m, delta=spec.delta, true_means=data.means(),
                           evaluator_id=ev.description), ev


def truth_digest(spec: ProblemSpec) -> str:
    rp = redundancy_problem(spec)
    key = {
        "L": rp.L,
        "mode": rp.mode,
        "paths": [list(p) for p in rp.paths],
        "log_means": list(rp.log_means),
        "log_sds": list(rp.log_sds),
        "reps": spec.truth_reps,
        "seed": spec.means_seed,
    }
    blob = json.dumps(key, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def redundancy_truth(spec: ProblemSpec, cache_dir: Optional[str] = None) -> TrueMeans:
    """Estimated allocation means, read from or written to the on-disk cache.

    Cache files are ``<cache_dir>/redundancy-<digest>.npz``; the digest covers
    the network, the lifetime parameters, the replication count and the seed.
    """
    cache_dir = cache_dir or spec.truth_cache
    digest = truth_digest(spec)
    path = os.path.join(cache_dir, f"redundancy-{digest}.npz")
    if os.path.exists(path):
        with np.load(path) as data:
            if str(data["digest"]) == digest:
                return TrueMeans(data["means"], data["ses"], digest, path)
        log.warning("cache file %s has a mismatched digest; recomputing", path)
    ev = RedundancyEvaluator(redundancy_problem(spec))
    log.info("estimating %d allocation means with %d reps each", ev.n_alternatives, spec.truth_reps)
    means, ses = estimate_true_means(ev, spec.truth_reps, rng=np.random.SeedSequence(spec.means_seed))
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + ".tmp.npz"
    np.savez(tmp, means=means, ses=ses, digest=np.array(digest), reps=spec.truth_reps)
    os.replace(tmp, path)
    return TrueMeans(means, ses, digest, path)


def true_means_for(spec: ProblemSpec, problem: ProblemInstance) -> TrueMeans:
    if spec.kind == "redundancy":
        return redundancy_truth(spec)
    if problem.true_means is None:
        raise ConfigurationError("no true means available for scoring")
    mu = np.asarray(problem.true_means, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise ConfigurationError("true means are not finite; scoring is undefined")
    return TrueMeans(mu, source="exact" if spec.kind == "synthetic" else "dataset")
