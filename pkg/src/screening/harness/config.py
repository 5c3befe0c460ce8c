"""Experiment configuration: TOML round-trip and content digest."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import tomli
import tomli_w

from ..algorithms.dispatch import ALGORITHMS
from ..evaluators.synthetic import PRESETS
from ..exceptions import ConfigurationError

PROBLEM_KINDS = ("synthetic", "redundancy", "empirical")
METRICS = ("PCS", "PGS", "PGSR")
BUDGET_RULES = ("per_alt", "total", "consistent")


@dataclass
class ProblemSpec:
    """What is being screened.

    Parameters
    ----------
    kind : {"synthetic", "redundancy", "empirical"}
    preset : str
        Synthetic preset name such as ``"SC-Normal"`` or ``"RM-Pareto"``.
    k, m : int
        ``k`` is ignored for redundancy (set by ``L``) and empirical data.
    delta : float
        Indifference-zone parameter used for the good set; for synthetic
        problems also the slippage gap or RM spacing.
    g : int
        Number of RM alternatives within ``delta`` of the best.
    base_params : list of float, optional
        Overrides the preset's base distribution parameters.
    means_seed : int
        Seed of the RM mean vector.
    redraw_means : bool
        Draw a fresh RM mean vector in every replication.
    L, mode, paths
        Redundancy network size, feasibility mode and optional path list.
    truth_reps : int
        Draws per allocation when estimating redundancy means.
    truth_cache : str
        Directory of cached mean estimates.
    path : str
        Empirical JSONL dataset.
    """

    kind: str = "synthetic"
    preset: str = "SC-Normal"
    k: int = 64
    m: int = 10
    delta: float = 0.1
    g: int = 15
    base_params: Optional[List[float]] = None
    means_seed: int = 0
    redraw_means: bool = False
    L: int = 13
    mode: str = "at_most"
    paths: Optional[List[List[int]]] = None
    truth_reps: int = 30_000
    truth_cache: str = ".screening-cache"
    path: str = ""

    def validate(self):
        _coerce_floats(self)
        if self.base_params is not None:
            self.base_params = [float(v) for v in self.base_params]
        if self.kind not in PROBLEM_KINDS:
            raise ConfigurationError(f"unknown problem kind {self.kind!r}; expected one of {PROBLEM_KINDS}")
        if self.kind == "synthetic" and self.preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.preset!r}; known: {sorted(PRESETS)}")
        if self.kind == "empirical" and not self.path:
            raise ConfigurationError("empirical problems need a dataset path")
        if self.m < 1:
            raise ConfigurationError("m must be positive")
        if self.delta < 0:
            raise ConfigurationError("delta must be nonnegative")
        if self.truth_reps < 2:
            raise ConfigurationError("truth_reps must be at least 2")


@dataclass
class AlgorithmSpec:
    name: str = "efg_m"
    M: Optional[int] = None
    M_ratio: Optional[float] = None
    group_count: Optional[int] = None
    ocbam_n1_fraction: float = 0.4
    ocbam_batch: int = 10

    def validate(self):
        _coerce_floats(self)
        if self.name not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.name!r}; expected one of {ALGORITHMS}")
        if self.M is not None and self.M_ratio is not None:
            raise ConfigurationError("give M or M_ratio, not both")

    def width(self, m: int) -> Optional[int]:
        if self.M is not None:
            return int(self.M)
        if self.M_ratio is not None:
            return int(round(self.M_ratio * m))
        return None


@dataclass
class BudgetSpec:
    """Budget rule.

    ``per_alt`` gives ``B = c k``; ``total`` fixes ``B``; ``consistent``
    sizes exploration and greedy phases from ``alpha`` and ``sigma_bar``.
    """

    rule: str = "per_alt"
    c: float = 100.0
    total: int = 0
    greedy_fraction: float = 0.2
    seeding_fraction: float = 0.2
    alpha: float = 0.1
    sigma_bar: float = 1.0

    def validate(self):
        _coerce_floats(self)
        if self.rule not in BUDGET_RULES:
            raise ConfigurationError(f"unknown budget rule {self.rule!r}; expected one of {BUDGET_RULES}")
        if self.rule == "per_alt" and self.c <= 0:
            raise ConfigurationError("c must be positive")
        if self.rule == "total" and self.total < 1:
            raise ConfigurationError("total budget must be positive")


@dataclass
class ParallelSpec:
    """Asynchronous runtime settings; ``workers = 0`` runs sequentially."""

    workers: int = 0
    latency_ms_max: float = 1.0
    staleness: Optional[int] = None
    mode: str = "simulated"

    def validate(self):
        _coerce_floats(self)
        if self.workers < 0:
            raise ConfigurationError("workers must be nonnegative")
        if self.latency_ms_max < 0:
            raise ConfigurationError("latency must be nonnegative")
        if self.mode not in ("simulated", "threaded"):
            raise ConfigurationError(f"unknown parallel mode {self.mode!r}")


@dataclass
class ExperimentConfig:
    """One experiment: problem, algorithm, budget, replication count and seed.

    ``output`` names the CSV to write (with a ``.jsonl`` audit log next to
    it) and does not enter the digest; every other field does.
    """

    problem: ProblemSpec = field(default_factory=ProblemSpec)
    algorithm: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    parallel: ParallelSpec = field(default_factory=ParallelSpec)
    replications: int = 100
    seed: int = 0
    metrics: List[str] = field(default_factory=lambda: list(METRICS))
    output: str = ""

    def __post_init__(self):
        for name, cls in (("problem", ProblemSpec), ("algorithm", AlgorithmSpec),
                          ("budget", BudgetSpec), ("parallel", ParallelSpec)):
            value = getattr(self, name)
            if isinstance(value, dict):
                setattr(self, name, _build(cls, value, name))
        self.metrics = list(self.metrics)
        self.validate()

    def validate(self):
        self.problem.validate()
        self.algorithm.validate()
        self.budget.validate()
        self.parallel.validate()
        if self.replications < 1:
            raise ConfigurationError("replications must be positive")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigurationError(f"unknown metrics {bad}; expected a subset of {METRICS}")
        if self.parallel.workers and self.algorithm.name not in ("efg_m", "efg_M", "efg_M_plus"):
            raise ConfigurationError("the parallel runtime only runs the EFG family")

    def to_dict(self) -> dict:
        return _strip_none(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, "config")

    def digest(self) -> str:
        """SHA-256 prefix of the canonical JSON of every field except ``output``."""
        data = self.to_dict()
        data.pop("output", None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"problem.k": 256})``."""
        data = copy.deepcopy(self.to_dict())
        for path, value in changes.items():
            node = data
            *parents, leaf = path.split(".")
            for p in parents:
                node = node.setdefault(p, {})
            if value is None:
                node.pop(leaf, None)
            else:
                node[leaf] = value
        return ExperimentConfig.from_dict(data)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _coerce_floats(obj):
    # 500 and 500.0 must give the same digest, so float fields are normalised.
    for f in fields(obj):
        value = getattr(obj, f.name)
        if f.type in ("float", "Optional[float]") and isinstance(value, int) and not isinstance(value, bool):
            setattr(obj, f.name, float(value))


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigurationError(f"[{where}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown keys in [{where}]: {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"bad [{where}] table: {exc}") from None


def _strip_none(obj):
    # TOML has no null, so optional fields are simply left out.
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_strip_none(v) for v in obj]
    return obj
