"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class TrusterError(Exception):
    """Base class for all errors raised by this package."""


class IngestionError(TrusterError):
    """A corpus file could not be read or produced no usable text."""


class ConfigError(TrusterError):
    """Invalid or incomplete configuration."""


class TransportError(TrusterError):
    """A remote call failed after all retries."""


class FixtureMissingError(TrusterError):
    """Replay mode was asked for an exchange that was never recorded."""

    def __init__(self, fixture_key: str, path: str | None = None):
        self.fixture_key = fixture_key
        detail = f" (looked in {path})" if path else ""
        super().__init__(f"no recorded fixture for key {fixture_key}{detail}")


class ExtractionError(TrusterError):
    """Relationship extraction failed; carries the raw model output."""

    def __init__(self, message: str, raw_response: str = ""):
        self.raw_response = raw_response
        super().__init__(message)


class TripletParseError(TrusterError):
    """No triplet array could be recovered from model output."""


class CsvFormatError(TrusterError):
    """A triplet CSV file violates the expected schema."""


class GmlError(TrusterError):
    """GML text could not be parsed into a valid directed graph."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmbeddingError(TrusterError):
    """Embedding provider failure or dimension mismatch."""


class ProviderMismatchError(TrusterError):
    """Vectors from different embedding providers must never be compared."""


class IndexFormatError(TrusterError):
    """The on-disk vector index is corrupt or has an unknown version."""


class StateError(TrusterError):
    """A command was run against a workspace in the wrong state."""


class StageError(TrusterError):
    """A pipeline stage failed; wraps the cause with the stage name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed: {message}")
