"""Resumable dataset collection and query cost accounting."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass

import numpy as np

from ..evaluators.empirical import EmpiricalDataset
from ..exceptions import ConfigurationError, DatasetParseError, LlmError
from .catalog import AlternativeCatalog
from .client import LlmClient, LlmEndpointConfig
from .prompt import PromptTemplate, render_prompt

log = logging.getLogger(__name__)


def _read_partial(path, k):
    """Observations already on disk (missing ids are empty) and the old meta record."""
    obs = [[] for _ in range(k)]
    meta = {}
    if not os.path.exists(path):
        return obs, meta
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON ({exc.msg})") from None
            if "id" not in rec:
                meta = rec.get("meta", meta)
                continue
            alt = int(rec["id"])
            if not 0 <= alt < k:
                raise DatasetParseError(path, line_no, f"id {alt} outside a catalog of {k}")
            obs[alt] = [float(x) for x in rec.get("obs", [])]
    return obs, meta


def _write(path, obs, meta):
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"meta": meta}) + "\n")
        for alt, values in enumerate(obs):
            if values:
                fh.write(json.dumps({"id": alt, "obs": values}) + "\n")
    os.replace(tmp, path)


def collect_dataset(endpoint: LlmEndpointConfig, catalog: AlternativeCatalog, template: PromptTemplate,
                    per_alt: int, out_path, *, max_in_flight: int = 8, checkpoint_every: int = 100,
                    transport=None) -> EmpiricalDataset:
    """Query every alternative until it holds ``per_alt`` observations.

    The output is a JSONL dataset readable by
    :func:`~screening.evaluators.load_empirical`. Observations already in
    ``out_path`` are kept and only the shortfall is requested, so an
    interrupted collection resumes without duplicates. The file is rewritten
    atomically every ``checkpoint_every`` answers and on failure.

    Raises
    ------
    CollectionError, TransportError
        From the first alternative that could not be completed; its id is in
        ``alt_id``. Progress up to that point is on disk.
    """
    if per_alt < 1:
        raise ConfigurationError("per_alt must be positive")
    if max_in_flight < 1:
        raise ConfigurationError("max_in_flight must be positive")
    k = len(catalog)
    if k == 0:
        raise ConfigurationError("empty catalog")
    prompts = [render_prompt(template, attrs) for attrs in catalog]
    obs, previous = _read_partial(out_path, k)
    for values in obs:
        del values[per_alt:]
    meta = {
        "k": k,
        "model": endpoint.model_name,
        "dialect": endpoint.dialect,
        "temperature": endpoint.temperature,
        "discard_above": endpoint.discard_above,
        "per_alt": int(per_alt),
        "attributes": catalog.attribute_names,
    }
    sent_before = int(previous.get("requests_sent", 0))
    todo = [alt for alt in range(k) for _ in range(per_alt - len(obs[alt]))]
    log.info("collecting %d observations over %d alternatives", len(todo), k)
    since_checkpoint = 0

    with LlmClient(endpoint, template.system_message, transport) as client:

        def one(alt):
            try:
                return client.sample_wtp(prompts[alt])
            except LlmError as exc:
                exc.alt_id = alt
                raise

        failure = None
        with ThreadPoolExecutor(max_in_flight) as pool:
            pending = {}
            queue = iter(todo)
            for alt in queue:
                pending[pool.submit(one, alt)] = alt
                if len(pending) >= max_in_flight:
                    break
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    alt = pending.pop(fut)
                    exc = fut.exception()
                    if exc is not None:
                        failure = failure or exc
                        continue
                    obs[alt].append(float(fut.result()))
                    since_checkpoint += 1
                    if since_checkpoint >= checkpoint_every:
                        _write(out_path, obs, {**meta, "requests_sent": sent_before + client.requests_sent})
                        since_checkpoint = 0
                    if failure is None:
                        nxt = next(queue, None)
                        if nxt is not None:
                            pending[pool.submit(one, nxt)] = nxt
        meta["requests_sent"] = sent_before + client.requests_sent
        _write(out_path, obs, meta)
    if failure is not None:
        raise failure
    return EmpiricalDataset([np.asarray(v, dtype=float) for v in obs], {"source": os.fspath(out_path), **meta})


@dataclass
class CostEstimate:
    queries: int
    tokens_per_query: float
    usd_per_million_tokens: float

    @property
    def tokens(self) -> float:
        return self.queries * self.tokens_per_query

    @property
    def usd(self) -> float:
        return self.tokens * self.usd_per_million_tokens / 1e6


def query_cost(queries: int, tokens_per_query: float = 80.0, usd_per_million_tokens: float = 0.6) -> CostEstimate:
    """Cost of ``queries`` requests, each counted at ``tokens_per_query`` tokens.

    Pass the sampling budget ``B = c k`` for a planning estimate (one
    request per observation), or a client's ``requests_sent`` for the actual
    spend, which also counts re-queries after discarded answers.
    """
    if queries < 0 or tokens_per_query < 0 or usd_per_million_tokens < 0:
        raise ConfigurationError("cost inputs must be nonnegative")
    return CostEstimate(int(queries), float(tokens_per_query), float(usd_per_million_tokens))


__all__ = ["CostEstimate", "collect_dataset", "query_cost"]
