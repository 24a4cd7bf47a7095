"""Ingest and normalize the raw text that makes up the body of knowledge.

Accepts plain text and Markdown (Markdown is stripped to plain text first).
Normalized documents keep paragraph breaks as explicit ``\\n\\n`` markers;
all other whitespace runs collapse to single spaces.
"""

from __future__ import annotations

import hashlib
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IngestionError

logger = logging.getLogger(__name__)

PARAGRAPH_SEP = "\n\n"
DEFAULT_MAX_CHUNK_CHARS = 6000
MIN_MAX_CHUNK_CHARS = 200

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class CorpusDocument:
    """One normalized source file."""

    doc_id: str
    source_path: str
    text: str
    word_count: int

    def paragraphs(self) -> list[str]:
        return self.text.split(PARAGRAPH_SEP) if self.text else []


@dataclass(frozen=True)
class DocumentChunk:
    """A contiguous slice of a document small enough for one extraction call.

    ``oversized`` marks the rare chunk holding a single sentence longer than
    the configured limit; it is emitted whole rather than split mid-sentence.
    """

    doc_id: str
    chunk_index: int
    text: str
    oversized: bool = field(default=False, compare=False)

    @property
    def source_id(self) -> str:
        return f"{self.doc_id}#{self.chunk_index}"


def strip_markdown(text: str) -> str:
    """Reduce common Markdown constructs to their plain-text content."""
    out = re.sub(r"^```.*$", "", text, flags=re.MULTILINE)  # fence markers
    out = re.sub(r"^(#{1,6})\s+", "", out, flags=re.MULTILINE)  # headings
    out = re.sub(r"^\s{0,3}>\s?", "", out, flags=re.MULTILINE)  # blockquotes
    out = re.sub(r"^\s{0,3}([-*+]|\d+[.)])\s+", "", out, flags=re.MULTILINE)  # list bullets
    out = re.sub(r"^\s*([-*_]\s*){3,}$", "", out, flags=re.MULTILINE)  # rules
    out = re.sub(r"!\[([^\]]*)\]\([^)]*\)", r"\1", out)  # images -> alt text
    out = re.sub(r"\[([^\]]+)\]\([^)]*\)", r"\1", out)  # links -> link text
    out = re.sub(r"(\*\*|__)(.+?)\1", r"\2", out, flags=re.DOTALL)
    out = re.sub(r"(\*|_)(.+?)\1", r"\2", out, flags=re.DOTALL)
    out = out.replace("`", "")
    return out


def normalize_text(raw: str, *, markdown: bool = False) -> str:
    """NFC-normalize, collapse whitespace, keep paragraph breaks as markers."""
    text = unicodedata.normalize("NFC", raw)
    if markdown:
        text = strip_markdown(text)
    paragraphs = []
    for block in re.split(r"\n\s*\n", text):
        collapsed = re.sub(r"\s+", " ", block).strip()
        if collapsed:
            paragraphs.append(collapsed)
    return PARAGRAPH_SEP.join(paragraphs)


def split_sentences(paragraph: str) -> list[str]:
    """Naive sentence split on terminal punctuation followed by whitespace."""
    return [s for s in _SENTENCE_BOUNDARY.split(paragraph) if s]


def document_sentences(doc: CorpusDocument) -> list[str]:
    return [s for p in doc.paragraphs() for s in split_sentences(p)]


def _make_doc_id(path: Path, text: str) -> str:
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]
    return f"{path.stem}-{digest}"


def ingest(paths: list[Path | str]) -> list[CorpusDocument]:
    """Read, decode and normalize each file into a CorpusDocument.

    Fails loud: undecodable or empty-after-normalization files abort the
    whole ingest rather than being silently skipped.
    """
    documents: list[CorpusDocument] = []
    seen_ids: dict[str, str] = {}
    for raw_path in paths:
        path = Path(raw_path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise IngestionError(f"cannot read {path}: {exc}") from exc
        try:
            raw = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestionError(f"{path} is not valid UTF-8: {exc}") from exc

        text = normalize_text(raw, markdown=path.suffix.lower() in {".md", ".markdown"})
        if not text:
            raise IngestionError(f"empty document: {path}")

        doc_id = _make_doc_id(path, text)
        if doc_id in seen_ids:
            raise IngestionError(
                f"duplicate document id {doc_id!r} for {path} (already used by {seen_ids[doc_id]})"
            )
        seen_ids[doc_id] = str(path)
        documents.append(
            CorpusDocument(
                doc_id=doc_id,
                source_path=str(path),
                text=text,
                word_count=len(text.split()),
            )
        )
    return documents


def chunk(doc: CorpusDocument, max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS) -> list[DocumentChunk]:
    """Split a document into chunks on paragraph, then sentence boundaries.

    Paragraphs are packed greedily; a paragraph that alone exceeds the limit
    falls back to sentence packing. A single over-long sentence is emitted
    whole and flagged rather than cut mid-thought.
    """
    if max_chunk_chars < MIN_MAX_CHUNK_CHARS:
        raise ValueError(f"max_chunk_chars must be >= {MIN_MAX_CHUNK_CHARS}, got {max_chunk_chars}")

    pieces: list[tuple[str, bool]] = []  # (text, oversized)

    def flush(parts: list[str], sep: str) -> None:
        if parts:
            pieces.append((sep.join(parts), False))

    pending: list[str] = []
    pending_len = 0
    for paragraph in doc.paragraphs():
        candidate = pending_len + (len(PARAGRAPH_SEP) if pending else 0) + len(paragraph)
        if pending and candidate > max_chunk_chars:
            flush(pending, PARAGRAPH_SEP)
            pending, pending_len = [], 0
        if not pending and len(paragraph) > max_chunk_chars:
            _pack_sentences(paragraph, max_chunk_chars, pieces)
            continue
        pending.append(paragraph)
        pending_len = pending_len + (len(PARAGRAPH_SEP) if pending_len else 0) + len(paragraph)
    flush(pending, PARAGRAPH_SEP)

    return [
        DocumentChunk(doc_id=doc.doc_id, chunk_index=i, text=text, oversized=oversized)
        for i, (text, oversized) in enumerate(pieces)
    ]


def _pack_sentences(paragraph: str, max_chunk_chars: int, pieces: list[tuple[str, bool]]) -> None:
    pending: list[str] = []
    pending_len = 0
    for sentence in split_sentences(paragraph):
        candidate = pending_len + (1 if pending else 0) + len(sentence)
        if pending and candidate > max_chunk_chars:
            pieces.append((" ".join(pending), False))
            pending, pending_len = [], 0
        if not pending and len(sentence) > max_chunk_chars:
            logger.warning("sentence of %d chars exceeds chunk limit; emitting whole", len(sentence))
            pieces.append((sentence, True))
            continue
        pending.append(sentence)
        pending_len = pending_len + (1 if pending_len else 0) + len(sentence)
    if pending:
        pieces.append((" ".join(pending), False))


def discover_corpus_files(corpus_dir: Path | str) -> list[Path]:
    """All *.txt and *.md files directly inside the corpus directory, sorted."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise IngestionError(f"corpus directory not found: {root}")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in {".txt", ".md", ".markdown"})
    return files
