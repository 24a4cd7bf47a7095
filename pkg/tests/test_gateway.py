"""Chat gateway: fixture record/replay and transport behavior."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from truster.errors import ConfigError, FixtureMissingError, TransportError
from truster.gateway import (
    BACKOFF_SECONDS,
    BASE_URL_ENV,
    ChatExchange,
    ChatGateway,
    LlmConfig,
    fixture_key,
    fixture_path,
    load_exchange,
    save_exchange,
)


class FakeResponse:
    def __init__(self, status_code: int, payload=None, text: str = ""):
        self.status_code = status_code
        self._payload = payload
        self.text = text or json.dumps(payload)

    def json(self):
        if self._payload is None:
            raise ValueError("no JSON body")
        return self._payload


def chat_payload(content: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


@pytest.fixture()
def live_env(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("TRUSTER_LLM_API_KEY", "test-key")
    monkeypatch.delenv(BASE_URL_ENV, raising=False)


def make_gateway(tmp_path: Path, mode: str, **kwargs) -> ChatGateway:
    sleeps: list[float] = []
    cfg = LlmConfig(mode=mode, fixtures_dir=tmp_path / "llm", **kwargs)
    gw = ChatGateway(cfg, sleep=sleeps.append)
    gw.sleeps = sleeps  # test hook
    return gw


def test_fixture_key_is_stable_and_input_sensitive() -> None:
    k1 = fixture_key("inst", "user", "gpt-4")
    assert k1 == fixture_key("inst", "user", "gpt-4")
    assert len(k1) == 64 and set(k1) <= set("0123456789abcdef")
    assert k1 != fixture_key("inst", "user", "gpt-4x")
    assert k1 != fixture_key("inst", "user2", "gpt-4")
    assert k1 != fixture_key("inst2", "user", "gpt-4")


def test_fixture_round_trip(tmp_path: Path) -> None:
    ex = ChatExchange.create("inst", "user with é and 中", '[["a","b","c"]]', "gpt-4")
    path = save_exchange(tmp_path, ex, "gpt-4")
    assert path == fixture_path(tmp_path, ex.fixture_key)
    back = load_exchange(tmp_path, ex.fixture_key)
    assert back == ex
    # fixtures stay readable: unescaped unicode, indented
    on_disk = path.read_text(encoding="utf-8")
    assert "中" in on_disk
    assert on_disk.startswith("{\n")


def test_replay_returns_recorded_text_byte_for_byte(tmp_path: Path) -> None:
    gw = make_gateway(tmp_path, "replay")
    response = 'prefix\n```json\n[["s", "p", "o"]]\n```\ntrailing\n'
    ex = ChatExchange.create("inst", "user", response, gw.config.model_name)
    save_exchange(gw.config.fixtures_dir, ex, gw.config.model_name)
    assert gw.chat_complete("inst", "user") == response


def test_replay_miss_raises_with_key(tmp_path: Path) -> None:
    gw = make_gateway(tmp_path, "replay")
    with pytest.raises(FixtureMissingError) as exc_info:
        gw.chat_complete("inst", "never recorded")
    assert exc_info.value.fixture_key == fixture_key("inst", "never recorded", gw.config.model_name)


def test_record_mode_calls_live_and_saves(tmp_path: Path, monkeypatch: pytest.MonkeyPatch, live_env) -> None:
    gw = make_gateway(tmp_path, "record")
    seen = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        seen.update(url=url, body=json, headers=headers, timeout=timeout)
        return FakeResponse(200, chat_payload("recorded!"))

    monkeypatch.setattr("truster.gateway.requests.post", fake_post)
    assert gw.chat_complete("inst", "user") == "recorded!"

    assert seen["url"] == "https://api.openai.com/v1/chat/completions"
    assert seen["headers"]["Authorization"] == "Bearer test-key"
    assert seen["body"]["model"] == "gpt-4"
    assert seen["body"]["temperature"] == 0.0
    assert seen["body"]["messages"] == [
        {"role": "system", "content": "inst"},
        {"role": "user", "content": "user"},
    ]

    # now replayable without the network
    replay = ChatGateway(LlmConfig(mode="replay", fixtures_dir=gw.config.fixtures_dir))
    assert replay.chat_complete("inst", "user") == "recorded!"


def test_empty_instructions_skip_system_message(tmp_path: Path, monkeypatch, live_env) -> None:
    gw = make_gateway(tmp_path, "live")
    seen = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        seen["body"] = json
        return FakeResponse(200, chat_payload("hi"))

    monkeypatch.setattr("truster.gateway.requests.post", fake_post)
    gw.chat_complete("", "just the question")
    assert seen["body"]["messages"] == [{"role": "user", "content": "just the question"}]


def test_base_url_env_override(tmp_path: Path, monkeypatch, live_env) -> None:
    monkeypatch.setenv(BASE_URL_ENV, "http://localhost:9999/v1/")
    gw = make_gateway(tmp_path, "live")
    seen = {}

    def fake_post(url, **kwargs):
        seen["url"] = url
        return FakeResponse(200, chat_payload("ok"))

    monkeypatch.setattr("truster.gateway.requests.post", fake_post)
    gw.chat_complete("i", "u")
    assert seen["url"] == "http://localhost:9999/v1/chat/completions"


def test_live_mode_requires_api_key(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.delenv("TRUSTER_LLM_API_KEY", raising=False)
    gw = make_gateway(tmp_path, "live")
    with pytest.raises(ConfigError, match="TRUSTER_LLM_API_KEY"):
        gw.chat_complete("i", "u")


def test_retry_backoff_schedule_then_success(tmp_path: Path, monkeypatch, live_env) -> None:
    gw = make_gateway(tmp_path, "live")
    attempts = []

    def flaky_post(url, **kwargs):
        attempts.append(1)
        if len(attempts) < 4:
            return FakeResponse(503, text="busy")
        return FakeResponse(200, chat_payload("finally"))

    monkeypatch.setattr("truster.gateway.requests.post", flaky_post)
    assert gw.chat_complete("i", "u") == "finally"
    assert len(attempts) == 4
    assert gw.sleeps == list(BACKOFF_SECONDS)


def test_retries_exhausted_raise_transport_error(tmp_path: Path, monkeypatch, live_env) -> None:
    gw = make_gateway(tmp_path, "live")
    attempts = []

    def always_429(url, **kwargs):
        attempts.append(1)
        return FakeResponse(429, text="rate limited")

    monkeypatch.setattr("truster.gateway.requests.post", always_429)
    with pytest.raises(TransportError, match="failed after 3 retries"):
        gw.chat_complete("i", "u")
    assert len(attempts) == len(BACKOFF_SECONDS) + 1


def test_connection_errors_also_retry(tmp_path: Path, monkeypatch, live_env) -> None:
    import requests as _requests

    gw = make_gateway(tmp_path, "live")

    def boom(url, **kwargs):
        raise _requests.ConnectionError("refused")

    monkeypatch.setattr("truster.gateway.requests.post", boom)
    with pytest.raises(TransportError, match="refused"):
        gw.chat_complete("i", "u")
    assert gw.sleeps == list(BACKOFF_SECONDS)


def test_client_error_fails_immediately(tmp_path: Path, monkeypatch, live_env) -> None:
    gw = make_gateway(tmp_path, "live")
    attempts = []

    def bad_request(url, **kwargs):
        attempts.append(1)
        return FakeResponse(400, text='{"error": "bad model"}')

    monkeypatch.setattr("truster.gateway.requests.post", bad_request)
    with pytest.raises(TransportError, match="HTTP 400"):
        gw.chat_complete("i", "u")
    assert attempts == [1]
    assert gw.sleeps == []


def test_malformed_response_body(tmp_path: Path, monkeypatch, live_env) -> None:
    gw = make_gateway(tmp_path, "live")
    monkeypatch.setattr(
        "truster.gateway.requests.post",
        lambda url, **kwargs: FakeResponse(200, {"choices": []}),
    )
    with pytest.raises(TransportError, match="malformed chat response"):
        gw.chat_complete("i", "u")


def test_config_rejects_unknown_mode() -> None:
    with pytest.raises(ConfigError, match="mode"):
        LlmConfig(mode="cached")


def test_config_rejects_nonpositive_timeout() -> None:
    with pytest.raises(ConfigError, match="timeout"):
        LlmConfig(timeout_seconds=0)
