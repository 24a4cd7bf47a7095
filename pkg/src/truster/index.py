"""Exact-cosine vector store for the knowledge-base sentences.

A linear scan over contiguous float64 storage. Results are exact (never
approximate) and totally ordered: score descending, then entry_id ascending,
so rendered reports are byte-stable across runs and platforms.
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexFormatError, ProviderMismatchError

MAGIC = b"TRIDX"
FORMAT_VERSION = 1

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for the zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class IndexEntry:
    entry_id: str
    vector: tuple[float, ...]
    sentence_text: str


@dataclass(frozen=True)
class Match:
    entry_id: str
    sentence_text: str
    score: float


class VectorIndex:
    """Mutable store; reads share, writes serialize through one lock."""

    def __init__(self, provider_id: str, dimension: int):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.provider_id = provider_id
        self.dimension = dimension
        self._lock = threading.RLock()
        self._ids: list[str] = []
        self._texts: list[str] = []
        self._rows: dict[str, int] = {}
        self._matrix = np.empty((0, dimension), dtype=np.float64)

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def entry_ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    def get(self, entry_id: str) -> IndexEntry | None:
        with self._lock:
            row = self._rows.get(entry_id)
            if row is None:
                return None
            return IndexEntry(
                entry_id=entry_id,
                vector=tuple(float(x) for x in self._matrix[row]),
                sentence_text=self._texts[row],
            )

    def upsert(self, entries: Iterable[IndexEntry]) -> None:
        with self._lock:
            for entry in entries:
                vec = np.asarray(entry.vector, dtype=np.float64)
                if vec.shape != (self.dimension,):
                    raise ValueError(
                        f"entry {entry.entry_id!r} has {vec.shape[0] if vec.ndim == 1 else '?'} "
                        f"components, index expects {self.dimension}"
                    )
                norm = float(np.linalg.norm(vec))
                if norm == 0.0 or not np.isfinite(norm):
                    raise ValueError(f"entry {entry.entry_id!r} has a degenerate vector")
                if norm != 1.0:
                    vec = vec / norm
                row = self._rows.get(entry.entry_id)
                if row is None:
                    self._rows[entry.entry_id] = len(self._ids)
                    self._ids.append(entry.entry_id)
                    self._texts.append(entry.sentence_text)
                    self._matrix = np.vstack([self._matrix, vec[None, :]])
                else:
                    self._texts[row] = entry.sentence_text
                    self._matrix[row] = vec

    def query(self, q: Sequence[float] | np.ndarray, t1: float) -> list[Match]:
        """All entries scoring >= t1, score descending, entry_id ascending."""
        qv = np.asarray(q, dtype=np.float64)
        if qv.shape != (self.dimension,):
            raise ValueError(f"query has shape {qv.shape}, index expects ({self.dimension},)")
        if float(np.linalg.norm(qv)) == 0.0:
            raise ValueError("cannot query with the zero vector")
        with self._lock:
            if not self._ids:
                return []
            scores = self._matrix @ qv
            hits = np.flatnonzero(scores >= t1)
            matches = [
                Match(entry_id=self._ids[i], sentence_text=self._texts[i], score=float(scores[i]))
                for i in hits
            ]
        matches.sort(key=lambda m: (-m.score, m.entry_id))
        return matches

    # --- persistence --------------------------------------------------------
    #
    # magic | u16 version | u32 header_len | header JSON |
    # per entry: u32 id_len, id, u32 text_len, text, dimension * f64 (LE)

    def persist(self, path: Path | str) -> None:
        path = Path(path)
        with self._lock:
            header = {
                "provider_id": self.provider_id,
                "dimension": self.dimension,
                "count": len(self._ids),
            }
            header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
            parts = [MAGIC, _U16.pack(FORMAT_VERSION), _U32.pack(len(header_bytes)), header_bytes]
            for i, entry_id in enumerate(self._ids):
                id_bytes = entry_id.encode("utf-8")
                text_bytes = self._texts[i].encode("utf-8")
                parts.append(_U32.pack(len(id_bytes)))
                parts.append(id_bytes)
                parts.append(_U32.pack(len(text_bytes)))
                parts.append(text_bytes)
                parts.append(self._matrix[i].astype("<f8").tobytes())
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(b"".join(parts))
        tmp.replace(path)

    @classmethod
    def load(cls, path: Path | str, *, expected_provider_id: str | None = None) -> "VectorIndex":
        path = Path(path)
        data = path.read_bytes()
        reader = _Reader(data, path)
        if reader.take(len(MAGIC)) != MAGIC:
            raise IndexFormatError(f"{path}: bad magic, not an index file")
        version = _U16.unpack(reader.take(_U16.size))[0]
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"{path}: unsupported format version {version}")
        header_len = _U32.unpack(reader.take(_U32.size))[0]
        try:
            header = json.loads(reader.take(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IndexFormatError(f"{path}: unreadable header: {exc}") from exc
        provider_id = header.get("provider_id")
        dimension = header.get("dimension")
        count = header.get("count")
        if not isinstance(provider_id, str) or not isinstance(dimension, int) or not isinstance(count, int):
            raise IndexFormatError(f"{path}: header missing provider_id/dimension/count")
        if expected_provider_id is not None and provider_id != expected_provider_id:
            raise ProviderMismatchError(
                f"index was built with provider {provider_id!r} but the workspace is "
                f"configured for {expected_provider_id!r}"
            )
        index = cls(provider_id=provider_id, dimension=dimension)
        rows = []
        for _ in range(count):
            id_len = _U32.unpack(reader.take(_U32.size))[0]
            entry_id = reader.take(id_len).decode("utf-8")
            text_len = _U32.unpack(reader.take(_U32.size))[0]
            text = reader.take(text_len).decode("utf-8")
            vec = np.frombuffer(reader.take(8 * dimension), dtype="<f8")
            rows.append((entry_id, text, vec))
        if reader.remaining:
            raise IndexFormatError(f"{path}: {reader.remaining} trailing bytes after last entry")
        for entry_id, text, vec in rows:
            if entry_id in index._rows:
                raise IndexFormatError(f"{path}: duplicate entry_id {entry_id!r}")
            index._rows[entry_id] = len(index._ids)
            index._ids.append(entry_id)
            index._texts.append(text)
        if rows:
            index._matrix = np.vstack([vec for _, _, vec in rows]).astype(np.float64)
        return index


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(f"{self.path}: truncated file (needed {n} more bytes)")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk
