"""HTTP client for chat-completion endpoints used as stochastic evaluators."""

from __future__ import annotations

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import httpx
import numpy as np

from ..evaluators.base import Evaluator
from ..exceptions import CollectionError, ConfigurationError, TransportError
from .prompt import PromptTemplate, extract_price, render_prompt

log = logging.getLogger(__name__)

DIALECTS = ("openai", "ollama")


@dataclass
class LlmEndpointConfig:
    """Where and how to query a model.

    Parameters
    ----------
    base_url : str
        Root of the API, e.g. ``https://api.openai.com/v1`` or
        ``http://localhost:11434``.
    model_name : str
    temperature : float
    max_retries : int
        Extra attempts after the first one, shared between unusable answers
        and transport failures.
    discard_above : float or None
        Answers above this value are dropped and re-queried.
    timeout : float
        Per-request timeout in seconds.
    dialect : {"openai", "ollama"}
        ``openai`` posts to ``/chat/completions``; ``ollama`` to
        ``/api/generate``.
    api_key_env : str
        Environment variable holding the key. Keys are never stored in the
        config itself, so configs can be written to disk safely.
    """

    base_url: str
    model_name: str
    temperature: float = 1.0
    max_retries: int = 5
    discard_above: Optional[float] = 6000.0
    timeout: float = 60.0
    dialect: str = "openai"
    api_key_env: str = "SCREENING_API_KEY"

    def __post_init__(self):
        if self.dialect not in DIALECTS:
            raise ConfigurationError(f"unknown dialect {self.dialect!r}; expected one of {DIALECTS}")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries must be nonnegative")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be positive")
        self.base_url = self.base_url.rstrip("/")

    @property
    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env) or None

    def to_dict(self):
        return asdict(self)


class LlmClient:
    """Stateless single-turn queries against one endpoint.

    Every request carries only the system message and the current prompt;
    nothing from earlier answers is sent back. The instance can be shared
    between threads. ``requests_sent`` counts every HTTP request, including
    re-queries after discarded answers, for cost accounting.

    Parameters
    ----------
    endpoint : LlmEndpointConfig
    system_message : str
    transport : httpx.BaseTransport, optional
        Injected in tests (``httpx.MockTransport``).
    """

    def __init__(self, endpoint: LlmEndpointConfig, system_message: str = "",
                 transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self.system_message = system_message
        self.requests_sent = 0
        self._count_lock = threading.Lock()
        headers = {"Content-Type": "application/json"}
        key = endpoint.api_key
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(
            base_url=endpoint.base_url, headers=headers, timeout=endpoint.timeout, transport=transport
        )

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request_body(self, prompt: str) -> dict:
        ep = self.endpoint
        if ep.dialect == "openai":
            messages = []
            if self.system_message:
                messages.append({"role": "system", "content": self.system_message})
            messages.append({"role": "user", "content": prompt})
            return {"model": ep.model_name, "messages": messages, "temperature": ep.temperature}
        body = {
            "model": ep.model_name,
            "prompt": prompt,
            "stream": False,
            "options": {"temperature": ep.temperature},
        }
        if self.system_message:
            body["system"] = self.system_message
        return body

    def complete(self, prompt: str) -> str:
        """One raw completion. HTTP failures surface as :class:`httpx.HTTPError`."""
        path = "/chat/completions" if self.endpoint.dialect == "openai" else "/api/generate"
        with self._count_lock:
            self.requests_sent += 1
        resp = self._http.post(path, json=self.request_body(prompt))
        resp.raise_for_status()
        data = resp.json()
        try:
            if self.endpoint.dialect == "openai":
                return data["choices"][0]["message"]["content"] or ""
            return data["response"]
        except (KeyError, IndexError, TypeError) as exc:
            raise httpx.DecodingError(f"unexpected response shape: {exc!r}") from None

    def sample_wtp(self, prompt: str) -> float:
        """First usable price for ``prompt``.

        Answers without a number, or above ``discard_above``, are re-queried.
        At most ``1 + max_retries`` requests are made.

        Raises
        ------
        CollectionError
            Every attempt returned an unusable answer; carries the last one.
        TransportError
            The final attempt failed at the HTTP level.
        """
        ep = self.endpoint
        last_text, last_exc = None, None
        attempts = ep.max_retries + 1
        for attempt in range(attempts):
            try:
                text = self.complete(prompt)
            except (httpx.HTTPError, ValueError) as exc:
                last_exc = exc
                log.debug("attempt %d failed: %r", attempt + 1, exc)
                continue
            last_exc = None
            last_text = text
            value = extract_price(text)
            if value is None:
                log.debug("attempt %d: no price in %r", attempt + 1, text)
                continue
            if ep.discard_above is not None and value > ep.discard_above:
                log.debug("attempt %d: %s above %s, discarded", attempt + 1, value, ep.discard_above)
                continue
            return value
        if last_exc is not None:
            raise TransportError(
                f"request failed after {ep.max_retries} retries: {last_exc!r}", retries=ep.max_retries
            ) from last_exc
        raise CollectionError(
            f"no usable price after {attempts} attempts; last response {last_text!r}",
            last_response=last_text,
        )


def sample_wtp(endpoint: LlmEndpointConfig, prompt: str, system_message: str = "",
               transport: Optional[httpx.BaseTransport] = None) -> float:
    """One-off :meth:`LlmClient.sample_wtp` with a throwaway client."""
    with LlmClient(endpoint, system_message, transport) as client:
        return client.sample_wtp(prompt)


class LlmEvaluator(Evaluator):
    """Evaluator whose observation of alternative ``i`` is a fresh model answer.

    ``rng`` is ignored: randomness comes from the model's sampling. Batches
    are issued with at most ``max_in_flight`` concurrent requests.
    """

    def __init__(self, client: LlmClient, template: PromptTemplate, catalog, max_in_flight: int = 8):
        if max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be positive")
        self.client = client
        self.template = template
        self.catalog = catalog
        self.max_in_flight = int(max_in_flight)
        self._prompts = [render_prompt(template, attrs) for attrs in catalog]
        self.description = f"llm({client.endpoint.model_name})"

    @property
    def n_alternatives(self):
        return len(self._prompts)

    def prompt(self, alt: int) -> str:
        return self._prompts[alt]

    def value(self, alt: int, n: int = 0) -> float:
        try:
            return self.client.sample_wtp(self._prompts[alt])
        except (CollectionError, TransportError) as exc:
            exc.alt_id = int(alt)
            raise

    def sample(self, alts, rng=None):
        alts = np.asarray(alts, dtype=np.int64)
        if self.max_in_flight == 1 or alts.size <= 1:
            return np.array([self.value(a) for a in alts], dtype=float)
        with ThreadPoolExecutor(self.max_in_flight) as pool:
            return np.fromiter(pool.map(self.value, alts.tolist()), dtype=float, count=alts.size)
