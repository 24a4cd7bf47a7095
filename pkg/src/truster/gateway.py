"""Single client for every chat-completion call in the pipeline.

Speaks the de-facto chat-completions HTTP convention (POST to
``{base_url}/chat/completions``, JSON body, bearer auth). Every exchange can
be recorded to a JSON fixture and replayed later, so the whole pipeline runs
offline and deterministically in tests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import requests

from .errors import ConfigError, FixtureMissingError, TransportError

logger = logging.getLogger(__name__)

MODES = ("live", "record", "replay")
BASE_URL_ENV = "TRUSTER_LLM_BASE_URL"
DEFAULT_API_KEY_ENV = "TRUSTER_LLM_API_KEY"

# retry schedule on transport failure; beyond this the pipeline fails loud
BACKOFF_SECONDS = (1.0, 2.0, 4.0)


@dataclass
class LlmConfig:
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4"
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = 0.0
    timeout_seconds: int = 60
    mode: str = "replay"
    fixtures_dir: Path = Path("fixtures") / "llm"
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.timeout_seconds <= 0:
            raise ConfigError("timeout_seconds must be positive")
        self.fixtures_dir = Path(self.fixtures_dir)


def fixture_key(assistant_instructions: str, user_content: str, model_name: str) -> str:
    """Content hash identifying one exchange; equal inputs share a key."""
    payload = json.dumps(
        [assistant_instructions, user_content, model_name],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatExchange:
    assistant_instructions: str
    user_content: str
    response_text: str
    fixture_key: str = field(default="")

    @classmethod
    def create(
        cls, assistant_instructions: str, user_content: str, response_text: str, model_name: str
    ) -> "ChatExchange":
        return cls(
            assistant_instructions=assistant_instructions,
            user_content=user_content,
            response_text=response_text,
            fixture_key=fixture_key(assistant_instructions, user_content, model_name),
        )


def fixture_path(fixtures_dir: Path, key: str) -> Path:
    return Path(fixtures_dir) / f"{key}.json"


def save_exchange(fixtures_dir: Path, exchange: ChatExchange, model_name: str) -> Path:
    """Persist one exchange as a human-readable JSON fixture (atomic write)."""
    path = fixture_path(fixtures_dir, exchange.fixture_key)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "fixture_key": exchange.fixture_key,
        "model_name": model_name,
        "assistant_instructions": exchange.assistant_instructions,
        "user_content": exchange.user_content,
        "response_text": exchange.response_text,
    }
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load_exchange(fixtures_dir: Path, key: str) -> ChatExchange:
    path = fixture_path(fixtures_dir, key)
    if not path.is_file():
        raise FixtureMissingError(key, str(Path(fixtures_dir)))
    record = json.loads(path.read_text(encoding="utf-8"))
    return ChatExchange(
        assistant_instructions=record["assistant_instructions"],
        user_content=record["user_content"],
        response_text=record["response_text"],
        fixture_key=record["fixture_key"],
    )


class ChatGateway:
    """Thread-safe chat client with bounded in-flight requests."""

    def __init__(self, config: LlmConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._store_lock = threading.Lock()

    def chat_complete(self, assistant_instructions: str, user_content: str) -> str:
        cfg = self.config
        key = fixture_key(assistant_instructions, user_content, cfg.model_name)
        if cfg.mode == "replay":
            return load_exchange(cfg.fixtures_dir, key).response_text

        response_text = self._call_live(assistant_instructions, user_content)
        if cfg.mode == "record":
            exchange = ChatExchange(
                assistant_instructions=assistant_instructions,
                user_content=user_content,
                response_text=response_text,
                fixture_key=key,
            )
            with self._store_lock:  # single writer; readers go via load_exchange
                save_exchange(cfg.fixtures_dir, exchange, cfg.model_name)
        return response_text

    def _call_live(self, assistant_instructions: str, user_content: str) -> str:
        cfg = self.config
        api_key = os.environ.get(cfg.api_key_env, "")
        if not api_key:
            raise ConfigError(
                f"environment variable {cfg.api_key_env} must hold the API key in {cfg.mode} mode"
            )
        base_url = os.environ.get(BASE_URL_ENV) or cfg.base_url
        url = base_url.rstrip("/") + "/chat/completions"

        messages = []
        if assistant_instructions:
            messages.append({"role": "system", "content": assistant_instructions})
        messages.append({"role": "user", "content": user_content})
        body = {"model": cfg.model_name, "messages": messages, "temperature": cfg.temperature}
        headers = {"Authorization": f"Bearer {api_key}"}

        last_error: Exception | None = None
        with self._semaphore:
            for attempt in range(len(BACKOFF_SECONDS) + 1):
                if attempt:
                    self._sleep(BACKOFF_SECONDS[attempt - 1])
                try:
                    resp = requests.post(url, json=body, headers=headers, timeout=cfg.timeout_seconds)
                except requests.RequestException as exc:
                    last_error = exc
                    logger.warning("chat call failed (attempt %d): %s", attempt + 1, exc)
                    continue
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = TransportError(f"HTTP {resp.status_code} from {url}")
                    logger.warning("chat call got HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                    continue
                if resp.status_code != 200:
                    raise TransportError(f"HTTP {resp.status_code} from {url}: {resp.text[:500]}")
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, TypeError, ValueError) as exc:
                    raise TransportError(f"malformed chat response from {url}: {exc}") from exc
        raise TransportError(f"chat call failed after {len(BACKOFF_SECONDS)} retries: {last_error}")
