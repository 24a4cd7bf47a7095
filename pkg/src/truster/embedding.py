"""Triplet-to-sentence rendering and pluggable sentence embedding.

Two providers ship in the box: a remote HTTP provider speaking the common
`POST {base_url}/embeddings` convention (with record/replay fixtures, like
the chat gateway) and a deterministic FNV-1a hash embedder for offline
plumbing tests. Every vector leaving this module is L2-normalized float64.
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
from typing import Callable, Protocol, Sequence

import numpy as np
import requests

from .errors import ConfigError, EmbeddingError, FixtureMissingError, TransportError
from .gateway import BACKOFF_SECONDS, MODES
from .triplets import Triplet

logger = logging.getLogger(__name__)

HASH_DIMENSION = 256
HASH_PROVIDER_ID = f"hash:fnv1a64:{HASH_DIMENSION}"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3  # 1099511628211
_MASK64 = (1 << 64) - 1

DEFAULT_API_KEY_ENV = "TRUSTER_EMBED_API_KEY"
BASE_URL_ENV = "TRUSTER_EMBED_BASE_URL"

NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SentenceText:
    """A KB or answer sentence, traceable to the triplet it came from."""

    text: str
    source: Triplet

    def __post_init__(self) -> None:
        expected = f"{self.source.subject} {self.source.predicate} {self.source.object}"
        if self.text != expected:
            raise ValueError(f"sentence text {self.text!r} does not match its triplet")


@dataclass(frozen=True)
class EmbeddedSentence:
    sentence: SentenceText
    vector: tuple[float, ...]
    provider_id: str

    def array(self) -> np.ndarray:
        return np.asarray(self.vector, dtype=np.float64)


def triplet_to_sentence(t: Triplet) -> SentenceText:
    """Space-join of the three normalized parts."""
    return SentenceText(text=f"{t.subject} {t.predicate} {t.object}", source=t)


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def hash_embed(sentence: SentenceText | str) -> np.ndarray:
    """Deterministic bag-of-hashed-tokens embedding.

    Each whitespace token bumps component fnv1a_64(token) mod 256 by one;
    the count vector is then L2-normalized.
    """
    text = sentence.text if isinstance(sentence, SentenceText) else sentence
    tokens = text.split()
    if not tokens:
        raise EmbeddingError("cannot embed an empty sentence")
    vec = np.zeros(HASH_DIMENSION, dtype=np.float64)
    for token in tokens:
        vec[fnv1a_64(token.encode("utf-8")) % HASH_DIMENSION] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EmbeddingError("hash embedding collapsed to the zero vector")
    return vec / norm


class EmbeddingProvider(Protocol):
    provider_id: str
    dimension: int

    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]: ...


class HashEmbedder:
    """Offline provider built on hash_embed."""

    provider_id = HASH_PROVIDER_ID
    dimension = HASH_DIMENSION

    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]:
        return [hash_embed(text).tolist() for text in texts]


@dataclass
class EmbedConfig:
    """Remote embedding endpoint settings; `provider_id` pins model+dimension."""

    base_url: str = "https://api.openai.com/v1"
    model_name: str = "text-embedding-3-small"
    dimension: int = 1536
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_seconds: float = 60.0
    mode: str = "replay"
    fixtures_dir: Path = field(default_factory=lambda: Path("fixtures") / "embeddings")
    batch_size: int = 64

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.dimension <= 0:
            raise ConfigError("embedding dimension must be positive")
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")
        self.fixtures_dir = Path(self.fixtures_dir)

    @property
    def provider_id(self) -> str:
        return f"remote:{self.model_name}:{self.dimension}"


def embedding_fixture_key(provider_id: str, sentence_text: str) -> str:
    payload = json.dumps([provider_id, sentence_text], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def embedding_fixture_path(fixtures_dir: Path, key: str) -> Path:
    return Path(fixtures_dir) / f"{key}.json"


def save_embedding_fixture(
    fixtures_dir: Path, provider_id: str, sentence_text: str, vector: Sequence[float]
) -> Path:
    key = embedding_fixture_key(provider_id, sentence_text)
    path = embedding_fixture_path(fixtures_dir, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "fixture_key": key,
        "provider_id": provider_id,
        "sentence_text": sentence_text,
        "vector": [float(x) for x in vector],
    }
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load_embedding_fixture(fixtures_dir: Path, provider_id: str, sentence_text: str) -> list[float]:
    key = embedding_fixture_key(provider_id, sentence_text)
    path = embedding_fixture_path(fixtures_dir, key)
    if not path.exists():
        raise FixtureMissingError(fixture_key=key, path=path)
    record = json.loads(path.read_text(encoding="utf-8"))
    vector = record.get("vector")
    if not isinstance(vector, list) or not vector:
        raise EmbeddingError(f"fixture {path} has no vector")
    return [float(x) for x in vector]


class RemoteEmbedder:
    """Remote provider with the same live/record/replay discipline as the
    chat gateway. Fixtures are keyed per (provider_id, sentence), so replay
    works for any subset of previously recorded sentences.
    """

    def __init__(self, config: EmbedConfig, *, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.provider_id = config.provider_id
        self.dimension = config.dimension
        self._sleep = sleep
        self._store_lock = threading.Lock()

    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]:
        if self.config.mode == "replay":
            return [self._load_one(text) for text in texts]
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.config.batch_size):
            batch = list(texts[start : start + self.config.batch_size])
            vectors.extend(self._call_live(batch))
        if self.config.mode == "record":
            with self._store_lock:
                for text, vector in zip(texts, vectors):
                    save_embedding_fixture(
                        self.config.fixtures_dir, self.provider_id, text, vector
                    )
        return vectors

    def _load_one(self, text: str) -> list[float]:
        vector = load_embedding_fixture(self.config.fixtures_dir, self.provider_id, text)
        self._check_dimension(vector, text)
        return vector

    def _check_dimension(self, vector: list[float], text: str) -> None:
        if len(vector) != self.dimension:
            raise EmbeddingError(
                f"provider {self.provider_id} declared d={self.dimension} but returned "
                f"{len(vector)} components for {text!r}"
            )

    def _call_live(self, batch: list[str]) -> list[list[float]]:
        api_key = os.environ.get(self.config.api_key_env, "")
        if not api_key:
            raise ConfigError(
                f"mode {self.config.mode!r} needs an API key in ${self.config.api_key_env}"
            )
        base_url = os.environ.get(BASE_URL_ENV, "") or self.config.base_url
        url = base_url.rstrip("/") + "/embeddings"
        payload = {"model": self.config.model_name, "input": batch}
        headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}

        last_error: Exception | None = None
        for attempt in range(len(BACKOFF_SECONDS) + 1):
            if attempt:
                self._sleep(BACKOFF_SECONDS[attempt - 1])
            try:
                resp = requests.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout_seconds
                )
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("embeddings request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = TransportError(f"embeddings endpoint returned {resp.status_code}")
                logger.warning("embeddings endpoint returned %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"embeddings endpoint returned {resp.status_code}: {resp.text[:500]}"
                )
            return self._parse_response(resp.json(), batch)
        raise TransportError(f"embeddings request failed after retries: {last_error}")

    def _parse_response(self, body: dict, batch: list[str]) -> list[list[float]]:
        try:
            data = body["data"]
            rows = sorted(data, key=lambda row: row["index"])
            vectors = [[float(x) for x in row["embedding"]] for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != len(batch):
            raise EmbeddingError(
                f"embeddings response has {len(vectors)} vectors for {len(batch)} inputs"
            )
        for text, vector in zip(batch, vectors):
            self._check_dimension(vector, text)
        return vectors


def embed_batch(
    sentences: Sequence[SentenceText], provider: EmbeddingProvider
) -> list[EmbeddedSentence]:
    """Embed in order, re-normalizing whatever the provider returns."""
    if not sentences:
        raise EmbeddingError("embed_batch needs at least one sentence")
    raw = provider.embed_texts([s.text for s in sentences])
    if len(raw) != len(sentences):
        raise EmbeddingError(
            f"provider returned {len(raw)} vectors for {len(sentences)} sentences"
        )
    out: list[EmbeddedSentence] = []
    for sentence, components in zip(sentences, raw):
        if len(components) != provider.dimension:
            raise EmbeddingError(
                f"provider {provider.provider_id} declared d={provider.dimension} but "
                f"returned {len(components)} components"
            )
        vec = np.asarray(components, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not np.isfinite(norm):
            raise EmbeddingError(f"provider returned a degenerate vector for {sentence.text!r}")
        vec = vec / norm
        out.append(
            EmbeddedSentence(
                sentence=sentence,
                vector=tuple(float(x) for x in vec),
                provider_id=provider.provider_id,
            )
        )
    return out
