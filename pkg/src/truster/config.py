"""Flat `key = value` configuration for the pipeline.

Strings are double-quoted, numbers and true/false are bare, `#` starts a
full-line comment. Relative paths resolve against the config file's
directory. Secrets never live here: API keys come from the environment
variables the config names.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus import DEFAULT_MAX_CHUNK_CHARS, MIN_MAX_CHUNK_CHARS
from .embedding import EmbedConfig, EmbeddingProvider, HashEmbedder, RemoteEmbedder
from .engine import DEFAULT_A, DEFAULT_T1, ThresholdConfig
from .errors import ConfigError
from .gateway import MODES, LlmConfig

logger = logging.getLogger(__name__)

Value = str | int | float | bool

EMBED_PROVIDERS = ("hash", "remote")


def parse_config_text(text: str, *, source: str = "<config>") -> dict[str, Value]:
    values: dict[str, Value] = {}
    for line_no, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected `key = value`, got {line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if not key or not key.replace("_", "").isalnum():
            raise ConfigError(f"{source}:{line_no}: bad key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        values[key] = _parse_value(raw_value, source, line_no)
    return values


def _parse_value(raw: str, source: str, line_no: int) -> Value:
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"') or raw.count('"') != 2:
            raise ConfigError(f"{source}:{line_no}: malformed string {raw}")
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{source}:{line_no}: unquoted value {raw!r} is not a number") from None


def emit_config_text(values: dict[str, Value]) -> str:
    lines = []
    for key, value in values.items():
        if isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, (int, float)):
            lines.append(f"{key} = {value!r}")
        else:
            if '"' in value or "\n" in value:
                raise ConfigError(f"config value for {key!r} cannot contain quotes or newlines")
            lines.append(f'{key} = "{value}"')
    return "\n".join(lines) + "\n"


@dataclass
class TrusterConfig:
    """Everything the pipeline needs beyond the corpus itself."""

    t1: float = DEFAULT_T1
    a: float = DEFAULT_A
    b: int = 0  # KB sentence count; 0 until finalize records it
    mode: str = "replay"
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS

    llm_base_url: str = "https://api.openai.com/v1"
    llm_model: str = "gpt-4"
    llm_api_key_env: str = "TRUSTER_LLM_API_KEY"

    embed_provider: str = "hash"
    embed_base_url: str = "https://api.openai.com/v1"
    embed_model: str = "text-embedding-3-small"
    embed_dimension: int = 1536
    embed_api_key_env: str = "TRUSTER_EMBED_API_KEY"

    fixtures_dir: Path = field(default_factory=lambda: Path("fixtures"))
    prompts_dir: Path = field(default_factory=lambda: Path("prompts"))

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.embed_provider not in EMBED_PROVIDERS:
            raise ConfigError(
                f"embed_provider must be one of {EMBED_PROVIDERS}, got {self.embed_provider!r}"
            )
        if not 0.0 < self.t1 < 1.0:
            raise ConfigError(f"t1 must be in (0, 1), got {self.t1}")
        if not 0.0 < self.a <= 1.0:
            raise ConfigError(f"a must be in (0, 1], got {self.a}")
        if self.b < 0:
            raise ConfigError(f"b cannot be negative, got {self.b}")
        if self.max_chunk_chars < MIN_MAX_CHUNK_CHARS:
            raise ConfigError(f"max_chunk_chars must be at least {MIN_MAX_CHUNK_CHARS}")
        self.fixtures_dir = Path(self.fixtures_dir)
        self.prompts_dir = Path(self.prompts_dir)

    @classmethod
    def from_file(cls, path: Path | str) -> "TrusterConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values = parse_config_text(text, source=str(path))
        known = {f.name for f in fields(cls)}
        kwargs: dict[str, object] = {}
        for key, value in values.items():
            if key not in known:
                logger.warning("%s: ignoring unknown config key %r", path, key)
                continue
            if key in ("fixtures_dir", "prompts_dir"):
                if not isinstance(value, str):
                    raise ConfigError(f"{path}: {key} must be a quoted path")
                kwargs[key] = Path(value)
            elif key in ("t1", "a") and isinstance(value, int) and not isinstance(value, bool):
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        try:
            config = cls(**kwargs)  # type: ignore[arg-type]
        except TypeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return config.resolved_against(path.parent)

    def resolved_against(self, base: Path) -> "TrusterConfig":
        """Absolutize relative paths against `base`."""
        base = Path(base)

        def resolve(p: Path) -> Path:
            return p if p.is_absolute() else (base / p).resolve()

        return replace(
            self,
            fixtures_dir=resolve(self.fixtures_dir),
            prompts_dir=resolve(self.prompts_dir),
        )

    def to_text(self) -> str:
        values: dict[str, Value] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            values[f.name] = str(value) if isinstance(value, Path) else value
        return emit_config_text(values)

    def write(self, path: Path | str) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    # --- factories for the runtime pieces ------------------------------------

    def llm_config(self) -> LlmConfig:
        return LlmConfig(
            base_url=self.llm_base_url,
            model_name=self.llm_model,
            api_key_env=self.llm_api_key_env,
            mode=self.mode,
            fixtures_dir=self.fixtures_dir / "llm",
        )

    def embed_config(self) -> EmbedConfig:
        return EmbedConfig(
            base_url=self.embed_base_url,
            model_name=self.embed_model,
            dimension=self.embed_dimension,
            api_key_env=self.embed_api_key_env,
            mode=self.mode,
            fixtures_dir=self.fixtures_dir / "embeddings",
        )

    def provider(self) -> EmbeddingProvider:
        if self.embed_provider == "hash":
            return HashEmbedder()
        return RemoteEmbedder(self.embed_config())

    @property
    def provider_id(self) -> str:
        return HashEmbedder.provider_id if self.embed_provider == "hash" else self.embed_config().provider_id

    def thresholds(self, b: int | None = None) -> ThresholdConfig:
        effective_b = self.b if b is None else b
        if effective_b < 1:
            raise ConfigError("knowledge-base sentence count (b) is not set yet; finalize first")
        return ThresholdConfig(t1=self.t1, a=self.a, b=effective_b)
