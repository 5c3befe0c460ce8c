"""Resampling evaluator over recorded observations.

Dataset files are JSONL with one record per alternative::

    {"id": 0, "obs": [1210.0, 999.0, ...]}

A record may carry extra keys (``meta``); a leading record of the form
``{"meta": {...}}`` holds dataset-wide provenance such as the declared ``k``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exceptions import (
    AlternativeCountError,
    DatasetError,
    DatasetParseError,
    EmptyAlternativeError,
)
from .base import Evaluator


@dataclass
class EmpiricalDataset:
    observations: list
    provenance: dict = field(default_factory=dict)

    @property
    def k(self):
        return len(self.observations)

    def means(self):
        return np.array([o.mean() for o in self.observations])


class EmpiricalEvaluator(Evaluator):
    """Draws uniformly with replacement from each alternative's observations."""

    def __init__(self, dataset: EmpiricalDataset):
        self.dataset = dataset
        lengths = np.array([o.shape[0] for o in dataset.observations], dtype=np.int64)
        self._lengths = lengths
        self._starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        self._flat = np.concatenate(dataset.observations)
        self.description = dataset.provenance.get("source", "empirical")

    @property
    def n_alternatives(self):
        return self._lengths.shape[0]

    @property
    def true_means(self):
        return self.dataset.means()

    def sample(self, alts, rng):
        alts = np.asarray(alts, dtype=np.int64)
        pos = rng.integers(0, self._lengths[alts])
        return self._flat[self._starts[alts] + pos]


def load_empirical(path, k: Optional[int] = None) -> EmpiricalDataset:
    """Read a JSONL dataset.

    Raises
    ------
    DatasetParseError
        Malformed JSON or record shape; carries the 1-based line number.
    EmptyAlternativeError
        A record with no observations.
    AlternativeCountError
        The number of records differs from ``k`` (argument or meta record).
    """
    records = {}
    provenance = {"source": os.fspath(path)}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise DatasetParseError(path, line_no, "record is not an object")
            if "id" not in rec and "meta" in rec:
                provenance.update(rec["meta"])
                continue
            try:
                alt = int(rec["id"])
                obs = np.asarray(rec["obs"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetParseError(path, line_no, f"bad record ({exc})") from None
            if obs.ndim != 1:
                raise DatasetParseError(path, line_no, "obs must be a flat list")
            if alt in records:
                raise DatasetParseError(path, line_no, f"duplicate id {alt}")
            records[alt] = obs
    declared = k if k is not None else provenance.get("k")
    ids = sorted(records)
    if not ids:
        raise DatasetError(f"{path}: no alternative records")
    if declared is not None and len(ids) != int(declared):
        raise AlternativeCountError(path, int(declared), len(ids))
    if ids != list(range(len(ids))):
        raise AlternativeCountError(path, len(ids), ids[-1] + 1 if ids else 0)
    for alt in ids:
        if records[alt].size == 0:
            raise EmptyAlternativeError(path, alt)
    return EmpiricalDataset([records[a] for a in ids], provenance)


def dump_empirical(dataset: EmpiricalDataset, path):
    """Write ``dataset`` atomically (write to a sibling temp file, then rename)."""
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        meta = {k: v for k, v in dataset.provenance.items() if k != "source"}
        if meta:
            fh.write(json.dumps({"meta": meta}) + "\n")
        for alt, obs in enumerate(dataset.observations):
            fh.write(json.dumps({"id": alt, "obs": [float(x) for x in obs]}) + "\n")
    os.replace(tmp, path)
