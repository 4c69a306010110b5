"""Chat-completions client with a persistent cache, retries, and per-endpoint
concurrency limits.

The wire protocol is OpenAI-compatible JSON; tool schemas travel inside the
system message rather than as native tool parameters, so sampled outputs
always use the tagged format the scorer expects. The cache is an append-only
content-addressed directory of response files, which makes recorded runs
fully replayable offline.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import httpx

from .messages import Message
from .util import atomic_write_text, stable_hash

RETRYABLE_STATUS = (408, 429)


class AuthMissingError(RuntimeError):
    def __init__(self, env_var: str):
        super().__init__(f"auth env var {env_var} is not set")
        self.env_var = env_var


class EndpointExhaustedError(RuntimeError):
    def __init__(self, model_id: str, detail: str):
        super().__init__(f"{model_id}: retries exhausted ({detail})")
        self.model_id = model_id


@dataclass(frozen=True)
class EndpointConfig:
    model_id: str
    base_url: str
    api_key_env: str | None = None
    temperature: float = 1.0
    top_p: float = 1.0
    top_k: int = -1
    max_tokens: int = 4096
    timeout: float = 120.0
    max_in_flight: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")

    def sampling_params(self) -> dict:
        params = {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }
        if self.top_k != -1:
            params["top_k"] = self.top_k
        return params

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "base_url": self.base_url,
            "api_key_env": self.api_key_env,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "max_tokens": self.max_tokens,
            "timeout": self.timeout,
            "max_in_flight": self.max_in_flight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


def cache_key(model_id: str, messages: list[dict], params: dict, sample_index: int) -> str:
    return stable_hash(model_id, messages, params, sample_index)


class ResponseCache:
    """Append-only content-addressed store of response records."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, record: dict) -> None:
        path = self._path(key)
        if path.exists():
            return
        atomic_write_text(path, json.dumps(record, ensure_ascii=False))


class ChatClient:
    """Samples completions from one or more endpoints.

    Safe to call from multiple workers: each endpoint gets its own in-flight
    semaphore and the cache writes atomically. `transport` is an httpx
    transport override, used by the tests to script server behavior.
    """

    def __init__(
        self,
        cache_dir: Path | str | None = None,
        retries: int = 3,
        backoff_base: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.max_attempts = retries + 1
        self.backoff_base = backoff_base
        self._http = httpx.Client(transport=transport, timeout=None)
        self._semaphores: dict[str, threading.Semaphore] = {}
        self._lock = threading.Lock()
        self.requests_sent = 0

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _semaphore(self, endpoint: EndpointConfig) -> threading.Semaphore:
        with self._lock:
            key = f"{endpoint.base_url}|{endpoint.model_id}"
            if key not in self._semaphores:
                self._semaphores[key] = threading.Semaphore(endpoint.max_in_flight)
            return self._semaphores[key]

    def _headers(self, endpoint: EndpointConfig) -> dict:
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key_env:
            key = os.environ.get(endpoint.api_key_env)
            if not key:
                raise AuthMissingError(endpoint.api_key_env)
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request_once(self, endpoint: EndpointConfig, body: dict, headers: dict) -> httpx.Response:
        with self._semaphore(endpoint):
            with self._lock:
                self.requests_sent += 1
            return self._http.post(
                endpoint.base_url.rstrip("/") + "/chat/completions",
                json=body,
                headers=headers,
                timeout=endpoint.timeout,
            )

    def complete(self, endpoint: EndpointConfig, messages: list[Message], sample_index: int = 0) -> dict:
        """One completion, served from cache when possible.

        Returns {"model_id", "content", "usage", "cached"}; raises
        AuthMissingError for unresolvable credentials and
        EndpointExhaustedError once the retry budget is spent.
        """
        wire_messages = [m.to_dict() for m in messages]
        params = endpoint.sampling_params()
        key = cache_key(endpoint.model_id, wire_messages, params, sample_index)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return {**hit, "cached": True}

        headers = self._headers(endpoint)
        body = {"model": endpoint.model_id, "messages": wire_messages, **params}

        last_error = "unknown"
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._request_once(endpoint, body, headers)
            except httpx.TransportError as e:
                last_error = f"transport error: {e}"
                continue
            if resp.status_code in RETRYABLE_STATUS or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise EndpointExhaustedError(endpoint.model_id, f"HTTP {resp.status_code} (not retryable)")
            data = resp.json()
            record = {
                "model_id": endpoint.model_id,
                "content": data["choices"][0]["message"]["content"],
                "usage": data.get("usage"),
            }
            if self.cache is not None:
                self.cache.put(key, record)
            return {**record, "cached": False}
        raise EndpointExhaustedError(endpoint.model_id, last_error)

    def sample(
        self,
        context: list[Message],
        endpoints: list[EndpointConfig],
        n_per_endpoint: int = 1,
    ) -> list[dict]:
        """One record per (endpoint, sample index), in deterministic order.

        Failures after the retry budget become explicit absent records
        ({"content": None, "error": ...}) rather than being dropped or
        fabricated.
        """
        if not endpoints:
            raise ValueError("need at least one endpoint")
        jobs = [(ep, idx) for ep in endpoints for idx in range(n_per_endpoint)]

        def run(job):
            ep, idx = job
            try:
                result = self.complete(ep, context, sample_index=idx)
                return {"model_id": ep.model_id, "sample_index": idx, "content": result["content"]}
            except EndpointExhaustedError as e:
                return {"model_id": ep.model_id, "sample_index": idx, "content": None, "error": str(e)}

        workers = max(1, sum(ep.max_in_flight for ep in endpoints))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))


def load_endpoints(path: Path | str) -> list[EndpointConfig]:
    """endpoints.json: a list of endpoint config objects."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("endpoints", [])
    return [EndpointConfig.from_dict(d) for d in data]
