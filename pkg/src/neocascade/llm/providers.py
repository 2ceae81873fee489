"""Model endpoints: rate limiting, retries, and provider request mapping."""

from __future__ import annotations

import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass

import httpx

logger = logging.getLogger(__name__)

VOTER = "VOTER"
VERIFIER = "VERIFIER"


class EndpointError(Exception):
    pass


class TransientError(EndpointError):
    """Retryable failure: rate limiting, server error, network trouble."""


class EndpointDown(EndpointError):
    """An endpoint kept failing after all retries."""


@dataclass
class ModelEndpoint:
    name: str
    provider: str = "openai"
    base_url: str = ""
    model: str = ""
    auth_env: str = ""
    rate: float = 60.0  # requests per interval
    interval: float = 60.0  # seconds
    concurrency: int = 1
    role: str = VOTER
    max_retries: int = 5
    backoff: float = 1.0
    timeout: float = 120.0
    max_tokens: int = 256
    label_table: str = ""  # mock provider only

    def api_key(self) -> str | None:
        return os.environ.get(self.auth_env) if self.auth_env else None


class TokenBucket:
    """Blocking token bucket: ``rate`` tokens per ``interval`` seconds."""

    def __init__(self, rate: float, interval: float = 1.0, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0 or interval <= 0:
            raise ValueError("rate and interval must be positive")
        self.capacity = float(rate)
        self.per_second = rate / interval
        self.tokens = float(rate)
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.per_second)
                self._last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.per_second
            self._sleep(wait)


class Provider:
    """Base class: subclasses map a prompt to one completion string."""

    def __init__(self, endpoint: ModelEndpoint):
        self.endpoint = endpoint

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class _HTTPProvider(Provider):
    def __init__(self, endpoint: ModelEndpoint, client: httpx.Client | None = None):
        super().__init__(endpoint)
        self.client = client or httpx.Client(timeout=endpoint.timeout)

    def _post(self, url: str, headers: dict, payload: dict) -> dict:
        try:
            resp = self.client.post(url, headers=headers, json=payload)
        except httpx.TransportError as exc:
            raise TransientError(f"{self.endpoint.name}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientError(f"{self.endpoint.name}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise EndpointError(f"{self.endpoint.name}: HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()


class OpenAIChatProvider(_HTTPProvider):
    """OpenAI-compatible ``/chat/completions`` (vLLM, TGI, hosted APIs)."""

    def complete(self, prompt: str) -> str:
        ep = self.endpoint
        headers = {"Content-Type": "application/json"}
        key = ep.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": ep.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "max_tokens": ep.max_tokens,
        }
        data = self._post(ep.base_url.rstrip("/") + "/chat/completions", headers, payload)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            return ""


class AnthropicProvider(_HTTPProvider):
    """Anthropic ``/v1/messages``."""

    def complete(self, prompt: str) -> str:
        ep = self.endpoint
        headers = {"Content-Type": "application/json", "anthropic-version": "2023-06-01"}
        key = ep.api_key()
        if key:
            headers["x-api-key"] = key
        payload = {
            "model": ep.model,
            "max_tokens": ep.max_tokens,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        }
        data = self._post(ep.base_url.rstrip("/") + "/v1/messages", headers, payload)
        try:
            return "".join(b.get("text", "") for b in data["content"] if b.get("type") == "text")
        except (KeyError, TypeError):
            return ""


_PROMPT_TOKEN = re.compile(r"^TOKEN: (\S+)$", re.MULTILINE)


class MockProvider(Provider):
    """Deterministic stand-in that answers from a label table.

    ``labels`` maps surface -> label string; unknown surfaces get
    ``default``. ``drop_multi`` surfaces are left out of MULTI answers (so
    they hit the retry path), ``garbage`` surfaces always get an unparseable
    answer, and ``down`` makes every call fail transiently.
    """

    def __init__(self, endpoint: ModelEndpoint, labels=None, default: str = "NONE",
                 drop_multi=(), garbage=(), down: bool = False):
        super().__init__(endpoint)
        self.labels = dict(labels or {})
        if not self.labels and endpoint.label_table:
            self.labels = read_label_table(endpoint.label_table)
        self.default = default
        self.drop_multi = set(drop_multi)
        self.garbage = set(garbage)
        self.down = down
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        if self.down:
            raise TransientError(f"{self.endpoint.name}: mock endpoint down")
        surfaces = _PROMPT_TOKEN.findall(prompt)
        single = prompt.rstrip().endswith(":LABEL")
        lines = []
        for s in surfaces:
            if s in self.garbage or (not single and s in self.drop_multi):
                if s in self.garbage:
                    lines.append(f"{s}: probably a word?")
                continue
            lines.append(f"{s}:{self.labels.get(s, self.default)}")
        return "\n".join(lines)


def read_label_table(path) -> dict:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                surface, label = line.rstrip("\n").split("\t")[:2]
                table[surface] = label.strip().upper()
    return table


def make_provider(endpoint: ModelEndpoint, client: httpx.Client | None = None) -> Provider:
    kind = endpoint.provider.lower()
    if kind == "openai":
        return OpenAIChatProvider(endpoint, client)
    if kind == "anthropic":
        return AnthropicProvider(endpoint, client)
    if kind == "mock":
        return MockProvider(endpoint)
    raise ValueError(f"unknown provider {endpoint.provider!r}")


class EndpointClient:
    """Rate-limited, retrying wrapper around one provider."""

    def __init__(self, provider: Provider, bucket: TokenBucket | None = None, sleep=time.sleep,
                 rng: random.Random | None = None):
        self.provider = provider
        self.endpoint = provider.endpoint
        self.bucket = bucket or TokenBucket(self.endpoint.rate, self.endpoint.interval)
        self._sleep = sleep
        self._rng = rng or random.Random(0)

    @property
    def name(self) -> str:
        return self.endpoint.name

    def complete(self, prompt: str) -> str:
        ep = self.endpoint
        for attempt in range(ep.max_retries + 1):
            self.bucket.acquire()
            try:
                return self.provider.complete(prompt)
            except TransientError as exc:
                if attempt == ep.max_retries:
                    raise EndpointDown(f"{ep.name} failed after {attempt + 1} attempts: {exc}") from exc
                delay = ep.backoff * (2 ** attempt) * (1 + self._rng.random() * 0.25)
                logger.warning("%s: %s; retrying in %.1fs", ep.name, exc, delay)
                self._sleep(delay)
        raise AssertionError("unreachable")
