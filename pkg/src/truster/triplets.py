"""Turn text into normalized subject-predicate-object triplets.

Extraction is delegated to the chat gateway; this module owns prompt
assembly, response parsing, normalization, deduplication and the CSV
persistence format.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CsvFormatError, ExtractionError, TripletParseError
from .gateway import ChatGateway

logger = logging.getLogger(__name__)

ORIGIN_KNOWLEDGE_BASE = "knowledge_base"
ORIGIN_ANSWER = "answer"
ORIGINS = (ORIGIN_KNOWLEDGE_BASE, ORIGIN_ANSWER)

CSV_HEADER = ["subject", "predicate", "object", "origin", "source_id"]

_TERMINAL_PUNCT = ".,;:!?"
_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class Triplet:
    subject: str
    predicate: str
    object: str
    origin: str
    source_id: str

    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class TripletSet:
    triplets: tuple[Triplet, ...]
    deduplicated: bool = field(default=False)

    def __iter__(self) -> Iterator[Triplet]:
        return iter(self.triplets)

    def __len__(self) -> int:
        return len(self.triplets)

    def keys(self) -> set[tuple[str, str, str]]:
        return {t.key() for t in self.triplets}

    def dedup(self) -> "TripletSet":
        """Drop repeated (subject, predicate, object) keys; first occurrence wins."""
        seen: set[tuple[str, str, str]] = set()
        kept: list[Triplet] = []
        for t in self.triplets:
            if t.key() not in seen:
                seen.add(t.key())
                kept.append(t)
        return TripletSet(triplets=tuple(kept), deduplicated=True)


def merge(sets: Iterable[TripletSet]) -> TripletSet:
    """Concatenate in the given order, then dedup (first occurrence wins)."""
    combined: list[Triplet] = []
    for s in sets:
        combined.extend(s.triplets)
    return TripletSet(triplets=tuple(combined)).dedup()


def normalize_part(raw: str) -> str:
    """Lowercase, collapse whitespace, strip edges and terminal punctuation."""
    # control chars (legal in JSON strings) would corrupt the CSV layer
    s = re.sub(r"[\x00-\x1f\x7f-\x9f]", " ", raw)
    s = re.sub(r"\s+", " ", s).strip().lower()
    while s and (s[-1] in _TERMINAL_PUNCT or s[-1].isspace()):
        s = s[:-1]
    return s


def normalize_triplet(
    subject: str, predicate: str, object_: str, origin: str, source_id: str
) -> Triplet | None:
    """Normalize all three parts; return None (and log) if any part empties out."""
    parts = (normalize_part(subject), normalize_part(predicate), normalize_part(object_))
    if not all(parts):
        logger.info("rejected triplet with empty part after normalization: %r", (subject, predicate, object_))
        return None
    return Triplet(parts[0], parts[1], parts[2], origin=origin, source_id=source_id)


def _recover_json(raw: str):
    try:
        return json.loads(raw.strip())
    except (json.JSONDecodeError, ValueError):
        pass
    for block in _FENCE.findall(raw):
        try:
            return json.loads(block.strip())
        except (json.JSONDecodeError, ValueError):
            continue
    decoder = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch in "[{":
            try:
                value, _ = decoder.raw_decode(raw[i:])
                return value
            except (json.JSONDecodeError, ValueError):
                continue
    raise TripletParseError("no JSON value recoverable from model output")


def _as_scalar(value) -> str | None:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return str(value)
    return None


def parse_triplet_json(raw: str) -> list[tuple[str, str, str]]:
    """Parse the model's triplet output, tolerating fences and leading prose.

    Accepts an array of 3-element arrays, or an array of objects with three
    keys (any names, values taken in order). Elements with any other shape
    are dropped and counted in a warning.
    """
    value = _recover_json(raw)
    if isinstance(value, dict):
        nested = next((v for v in value.values() if isinstance(v, list)), None)
        if nested is None:
            raise TripletParseError("recovered JSON object contains no triplet array")
        value = nested
    if not isinstance(value, list):
        raise TripletParseError(f"expected a JSON array of triplets, got {type(value).__name__}")

    kept: list[tuple[str, str, str]] = []
    dropped = 0
    for item in value:
        if isinstance(item, dict):
            raw_parts = list(item.values())
        elif isinstance(item, list):
            raw_parts = item
        else:
            dropped += 1
            continue
        parts = [_as_scalar(p) for p in raw_parts]
        if len(parts) != 3 or any(p is None for p in parts):
            dropped += 1
            continue
        kept.append((parts[0], parts[1], parts[2]))
    if dropped:
        logger.warning("dropped %d malformed triplet element(s) from model output", dropped)
    return kept


@dataclass(frozen=True)
class PromptPair:
    """The two versioned prompt files driving extraction calls."""

    assistant_instructions: str
    user_preamble: str

    @classmethod
    def load(cls, prompts_dir: Path | str) -> "PromptPair":
        root = Path(prompts_dir)
        return cls(
            assistant_instructions=(root / "extract_assistant.txt").read_text(encoding="utf-8"),
            user_preamble=(root / "extract_user_preamble.txt").read_text(encoding="utf-8"),
        )

    def user_content(self, chunk_text: str) -> str:
        preamble = self.user_preamble.strip()
        return f"{preamble}\n\n{chunk_text}" if preamble else chunk_text


def extract_triplets(
    chunk_text: str,
    gateway: ChatGateway,
    prompts: PromptPair,
    *,
    origin: str,
    source_id: str,
) -> TripletSet:
    """One extraction call: prompt the model, parse, normalize, dedup."""
    if not chunk_text.strip():
        raise ValueError("chunk_text must be non-empty")
    if origin not in ORIGINS:
        raise ValueError(f"origin must be one of {ORIGINS}, got {origin!r}")

    response = gateway.chat_complete(prompts.assistant_instructions, prompts.user_content(chunk_text))
    try:
        raw_triplets = parse_triplet_json(response)
    except TripletParseError as exc:
        raise ExtractionError(f"unparseable extraction output: {exc}", raw_response=response) from exc

    normalized = [
        t
        for s, p, o in raw_triplets
        if (t := normalize_triplet(s, p, o, origin=origin, source_id=source_id)) is not None
    ]
    result = TripletSet(triplets=tuple(normalized)).dedup()
    if not result.triplets:
        logger.warning("extraction produced no triplets for %s", source_id)
    return result


def write_csv(triplet_set: TripletSet, path: Path | str) -> None:
    """Write UTF-8, LF-terminated CSV with RFC 4180 quoting."""
    target = Path(path)
    with target.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t in triplet_set:
            writer.writerow([t.subject, t.predicate, t.object, t.origin, t.source_id])


def read_csv(path: Path | str) -> TripletSet:
    source = Path(path)
    if not source.is_file():
        raise CsvFormatError(f"triplet CSV not found: {source}")
    triplets: list[Triplet] = []
    with source.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{source}: empty file, expected header {CSV_HEADER}") from None
        if header != CSV_HEADER:
            raise CsvFormatError(f"{source}: bad header {header!r}, expected {CSV_HEADER}")
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise CsvFormatError(f"{source}: row {reader.line_num} has {len(row)} fields, expected {len(CSV_HEADER)}")
            subject, predicate, object_, origin, source_id = row
            if origin not in ORIGINS:
                raise CsvFormatError(f"{source}: row {reader.line_num} has invalid origin {origin!r}")
            triplets.append(Triplet(subject, predicate, object_, origin=origin, source_id=source_id))
    # rows come back exactly as written; callers dedup when they need the flag
    return TripletSet(triplets=tuple(triplets))
