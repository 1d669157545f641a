"""LLM gateway: cache behavior, retry/backoff policy, replay mode, and the
scripted mock."""

import json

import httpx
import pytest

from codegames.errors import CacheMissError, LlmUnavailableError, ScriptExhaustedError
from codegames.gateway import (
    CompletionRequest,
    HttpClient,
    ReplayCache,
    ReplayClient,
    cache_key,
    scripted_mock,
)


def _ok_response(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest(prompt="")


def test_cache_key_depends_on_all_inputs():
    base = cache_key("p", 1.0, "m")
    assert cache_key("p", 1.0, "m") == base
    assert cache_key("q", 1.0, "m") != base
    assert cache_key("p", 0.5, "m") != base
    assert cache_key("p", 1.0, "n") != base
    assert len(base) == 64  # sha256 hex


def test_replay_cache_round_trip(tmp_path):
    cache = ReplayCache(tmp_path / "cache")
    request = CompletionRequest(prompt="hello")
    assert cache.get(request) is None
    cache.put(request, "world")
    assert cache.get(request) == "world"
    # Stored as one JSON file per key.
    files = list((tmp_path / "cache").glob("*.json"))
    assert len(files) == 1
    assert json.loads(files[0].read_text())["response"] == "world"


def test_replay_client_serves_only_from_cache(tmp_path):
    cache = ReplayCache(tmp_path)
    cache.put(CompletionRequest(prompt="known"), "answer")
    client = ReplayClient(cache)
    assert client.complete(CompletionRequest(prompt="known")) == "answer"
    with pytest.raises(CacheMissError):
        client.complete(CompletionRequest(prompt="novel"))


def test_http_client_returns_completion_and_caches(tmp_path):
    seen = []

    def handler(request):
        seen.append(json.loads(request.content))
        return _ok_response("generated code")

    client = HttpClient(
        endpoint="http://llm.test/v1/chat",
        api_key="secret",
        cache=ReplayCache(tmp_path),
        transport=httpx.MockTransport(handler),
        sleep=lambda _s: None,
    )
    request = CompletionRequest(prompt="write a function", temperature=0.7)
    assert client.complete(request) == "generated code"
    assert seen[0]["messages"] == [{"role": "user", "content": "write a function"}]
    assert seen[0]["temperature"] == 0.7
    # Second call is served from cache: no new HTTP request.
    assert client.complete(request) == "generated code"
    assert len(seen) == 1


def test_http_client_retries_transient_errors_with_backoff():
    statuses = [429, 503]
    delays = []

    def handler(request):
        if statuses:
            return httpx.Response(statuses.pop(0), text="busy")
        return _ok_response("finally")

    client = HttpClient(
        endpoint="http://llm.test/v1/chat",
        transport=httpx.MockTransport(handler),
        sleep=delays.append,
    )
    assert client.complete(CompletionRequest(prompt="p")) == "finally"
    assert len(delays) == 2
    assert delays[1] > delays[0]  # exponential backoff


def test_http_client_gives_up_after_max_attempts():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500, text="down")

    client = HttpClient(
        endpoint="http://llm.test/v1/chat",
        transport=httpx.MockTransport(handler),
        sleep=lambda _s: None,
    )
    with pytest.raises(LlmUnavailableError):
        client.complete(CompletionRequest(prompt="p"))
    assert len(calls) == 5


def test_http_client_does_not_retry_client_errors():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="no")

    client = HttpClient(
        endpoint="http://llm.test/v1/chat",
        transport=httpx.MockTransport(handler),
        sleep=lambda _s: None,
    )
    with pytest.raises(LlmUnavailableError):
        client.complete(CompletionRequest(prompt="p"))
    assert len(calls) == 1


def test_http_client_without_endpoint_or_cache_hit_fails(tmp_path, monkeypatch):
    monkeypatch.delenv("CODEGAMES_LLM_ENDPOINT", raising=False)
    client = HttpClient(cache=ReplayCache(tmp_path))
    with pytest.raises(LlmUnavailableError):
        client.complete(CompletionRequest(prompt="p"))


def test_scripted_mock_plays_in_order_then_raises():
    client = scripted_mock(["first", "second"])
    assert client.complete(CompletionRequest(prompt="a")) == "first"
    assert client.complete(CompletionRequest(prompt="b")) == "second"
    with pytest.raises(ScriptExhaustedError):
        client.complete(CompletionRequest(prompt="c"))
    assert client.prompts == ["a", "b", "c"]
