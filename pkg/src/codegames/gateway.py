"""Text-completion client with a deterministic replay cache.

Live mode talks to a chat-completion HTTP endpoint (configured via
environment variables) with bounded retries and exponential backoff, storing
every response in an on-disk cache. Replay mode serves exclusively from that
cache so the synthesis pipeline runs offline and deterministically. A
scripted mock returns canned responses in order, for tests.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import httpx

from codegames.errors import CacheMissError, LlmUnavailableError, ScriptExhaustedError

MAX_ATTEMPTS = 5
BACKOFF_BASE_SECONDS = 1.0


@dataclass
class CompletionRequest:
    prompt: str
    temperature: float = 1.0
    max_output_tokens: int = 8192
    model_name: str = "default"
    request_id: int = 0

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


def cache_key(prompt: str, temperature: float, model_name: str) -> str:
    payload = json.dumps(
        {"prompt": prompt, "temperature": temperature, "model_name": model_name},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayCache:
    """Content-addressed store of LLM responses: one file per request hash."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, request: CompletionRequest) -> Optional[str]:
        path = self._path(cache_key(request.prompt, request.temperature, request.model_name))
        if not path.exists():
            return None
        return json.loads(path.read_text())["response"]

    def put(self, request: CompletionRequest, response: str):
        key = cache_key(request.prompt, request.temperature, request.model_name)
        self._path(key).write_text(
            json.dumps(
                {
                    "response": response,
                    "model_name": request.model_name,
                    "temperature": request.temperature,
                }
            )
        )


class LlmClient:
    """Shared interface: `complete(request) -> response text`."""

    def complete(self, request: CompletionRequest) -> str:
        raise NotImplementedError


class HttpClient(LlmClient):
    """Live client for an OpenAI-style chat completion endpoint."""

    def __init__(
        self,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        model_name: Optional[str] = None,
        cache: Optional[ReplayCache] = None,
        transport=None,
        sleep=time.sleep,
        jitter: Optional[random.Random] = None,
    ):
        self.endpoint = endpoint or os.environ.get("CODEGAMES_LLM_ENDPOINT", "")
        self.api_key = api_key or os.environ.get("CODEGAMES_LLM_API_KEY", "")
        self.model_name = model_name or os.environ.get("CODEGAMES_LLM_MODEL", "default")
        self.cache = cache
        self._client = httpx.Client(transport=transport, timeout=120.0)
        self._sleep = sleep
        self._jitter = jitter or random.Random(0)

    def complete(self, request: CompletionRequest) -> str:
        if self.cache is not None:
            cached = self.cache.get(request)
            if cached is not None:
                return cached
        if not self.endpoint:
            raise LlmUnavailableError("no endpoint configured and no cache hit")
        body = {
            "model": request.model_name or self.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                response = self._client.post(self.endpoint, json=body, headers=headers)
                if response.status_code == 200:
                    text = response.json()["choices"][0]["message"]["content"]
                    if self.cache is not None:
                        self.cache.put(request, text)
                    return text
                if response.status_code in (408, 429, 500, 502, 503, 504):
                    last_error = f"HTTP {response.status_code}"
                else:
                    raise LlmUnavailableError(
                        f"completion endpoint returned HTTP {response.status_code}"
                    )
            except httpx.HTTPError as exc:
                last_error = repr(exc)
            delay = BACKOFF_BASE_SECONDS * (2**attempt) * (1 + 0.1 * self._jitter.random())
            self._sleep(delay)
        raise LlmUnavailableError(f"completion failed after {MAX_ATTEMPTS} attempts: {last_error}")


class ReplayClient(LlmClient):
    """Cache-only client: a novel prompt is an error."""

    def __init__(self, cache: ReplayCache):
        self.cache = cache

    def complete(self, request: CompletionRequest) -> str:
        cached = self.cache.get(request)
        if cached is None:
            raise CacheMissError(
                f"no cached response for key "
                f"{cache_key(request.prompt, request.temperature, request.model_name)}"
            )
        return cached


@dataclass
class ScriptedClient(LlmClient):
    """Returns scripted responses in order; further calls raise."""

    script: Sequence[str]
    calls: int = 0
    prompts: list = field(default_factory=list)

    def complete(self, request: CompletionRequest) -> str:
        self.prompts.append(request.prompt)
        if self.calls >= len(self.script):
            raise ScriptExhaustedError(f"script exhausted after {len(self.script)} responses")
        response = self.script[self.calls]
        self.calls += 1
        return response


def scripted_mock(script: Sequence[str]) -> ScriptedClient:
    return ScriptedClient(script=list(script))
