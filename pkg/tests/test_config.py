"""Flat key = value config: parsing, emission and factory wiring."""

from __future__ import annotations

import logging
from pathlib import Path

import pytest

from truster.config import TrusterConfig, emit_config_text, parse_config_text
from truster.embedding import HASH_PROVIDER_ID, HashEmbedder, RemoteEmbedder
from truster.errors import ConfigError


# --- low-level parser --------------------------------------------------------


def test_parse_basic_types() -> None:
    text = (
        "# a comment\n"
        "\n"
        'name = "quoted string"\n'
        "count = 25\n"
        "ratio = 0.12\n"
        "flag = true\n"
        "off = false\n"
    )
    assert parse_config_text(text) == {
        "name": "quoted string",
        "count": 25,
        "ratio": 0.12,
        "flag": True,
        "off": False,
    }


def test_parse_negative_and_exponent_numbers() -> None:
    assert parse_config_text("x = -3\ny = 1e-2\n") == {"x": -3, "y": 0.01}


def test_parse_string_keeps_spaces_and_equals() -> None:
    assert parse_config_text('k = "a = b # c"\n') == {"k": "a = b # c"}


@pytest.mark.parametrize(
    ("text", "fragment"),
    [
        ("just words\n", ":1: expected `key = value`"),
        ("ok = 1\n= 2\n", ":2: bad key"),
        ("a = 1\na = 2\n", ":2: duplicate key 'a'"),
        ('s = "unterminated\n', ":1: malformed string"),
        ('s = "two" "strings"\n', ":1: malformed string"),
        ("v = maybe\n", ":1: unquoted value 'maybe' is not a number"),
        ("bad-key = 1\n", ":1: bad key"),
    ],
)
def test_parse_errors_carry_source_and_line(text: str, fragment: str) -> None:
    with pytest.raises(ConfigError, match="cfg.toml"):
        parse_config_text(text, source="cfg.toml")
    with pytest.raises(ConfigError) as exc_info:
        parse_config_text(text, source="cfg.toml")
    assert fragment in str(exc_info.value)


def test_emit_parse_round_trip() -> None:
    values = {"s": "text", "i": 42, "f": 0.6, "t": True, "n": False}
    assert parse_config_text(emit_config_text(values)) == values


def test_emit_rejects_unrepresentable_strings() -> None:
    with pytest.raises(ConfigError, match="cannot contain"):
        emit_config_text({"k": 'has "quotes"'})
    with pytest.raises(ConfigError, match="cannot contain"):
        emit_config_text({"k": "has\nnewline"})


# --- TrusterConfig ------------------------------------------------------------


def test_defaults_are_valid_and_offline() -> None:
    cfg = TrusterConfig()
    assert cfg.mode == "replay"
    assert cfg.embed_provider == "hash"
    assert cfg.t1 == 0.6
    assert cfg.a == 0.12
    assert cfg.b == 0


@pytest.mark.parametrize(
    ("kwargs", "fragment"),
    [
        ({"mode": "cached"}, "mode must be one of"),
        ({"embed_provider": "local"}, "embed_provider must be one of"),
        ({"t1": 0.0}, "t1 must be in"),
        ({"t1": 1.0}, "t1 must be in"),
        ({"a": 0.0}, "a must be in"),
        ({"a": 1.5}, "a must be in"),
        ({"b": -1}, "b cannot be negative"),
        ({"max_chunk_chars": 100}, "max_chunk_chars"),
    ],
)
def test_validation_errors(kwargs, fragment) -> None:
    with pytest.raises(ConfigError, match=fragment):
        TrusterConfig(**kwargs)


def test_write_then_from_file_round_trips(tmp_path: Path) -> None:
    cfg = TrusterConfig(
        t1=0.55,
        a=0.2,
        b=10,
        mode="record",
        embed_provider="remote",
        embed_model="toy",
        embed_dimension=8,
        fixtures_dir=tmp_path / "fx",
        prompts_dir=tmp_path / "pr",
    )
    path = tmp_path / "config.toml"
    cfg.write(path)
    back = TrusterConfig.from_file(path)
    assert back == cfg


def test_from_file_resolves_relative_paths(tmp_path: Path) -> None:
    nested = tmp_path / "ws"
    nested.mkdir()
    (nested / "config.toml").write_text(
        'fixtures_dir = "fixtures"\nprompts_dir = "../prompts"\n', encoding="utf-8"
    )
    cfg = TrusterConfig.from_file(nested / "config.toml")
    assert cfg.fixtures_dir == (nested / "fixtures").resolve()
    assert cfg.prompts_dir == (tmp_path / "prompts").resolve()


def test_from_file_ignores_unknown_keys_with_warning(
    tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    path = tmp_path / "config.toml"
    path.write_text("t1 = 0.7\nshiny_new_option = 3\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="truster.config"):
        cfg = TrusterConfig.from_file(path)
    assert cfg.t1 == 0.7
    assert "shiny_new_option" in caplog.text


def test_from_file_coerces_integer_thresholds(tmp_path: Path) -> None:
    # `a = 1` should read as the float 1.0, not explode on the int type
    path = tmp_path / "config.toml"
    path.write_text("a = 1\n", encoding="utf-8")
    assert TrusterConfig.from_file(path).a == 1.0


def test_from_file_missing_file() -> None:
    with pytest.raises(ConfigError, match="cannot read config"):
        TrusterConfig.from_file("/no/such/config.toml")


def test_from_file_path_keys_must_be_strings(tmp_path: Path) -> None:
    path = tmp_path / "config.toml"
    path.write_text("fixtures_dir = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="quoted path"):
        TrusterConfig.from_file(path)


def test_from_file_reports_bad_value_lines(tmp_path: Path) -> None:
    path = tmp_path / "config.toml"
    path.write_text("t1 = 0.6\nmode = replay\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"config\.toml:2"):
        TrusterConfig.from_file(path)


# --- factories ------------------------------------------------------------------


def test_llm_and_embed_configs_inherit_mode_and_fixtures(tmp_path: Path) -> None:
    cfg = TrusterConfig(mode="record", fixtures_dir=tmp_path / "fx")
    llm = cfg.llm_config()
    emb = cfg.embed_config()
    assert llm.mode == "record"
    assert emb.mode == "record"
    assert llm.fixtures_dir == tmp_path / "fx" / "llm"
    assert emb.fixtures_dir == tmp_path / "fx" / "embeddings"


def test_provider_selection() -> None:
    assert isinstance(TrusterConfig(embed_provider="hash").provider(), HashEmbedder)
    remote_cfg = TrusterConfig(embed_provider="remote", embed_model="toy", embed_dimension=4)
    provider = remote_cfg.provider()
    assert isinstance(provider, RemoteEmbedder)
    assert provider.provider_id == "remote:toy:4"
    assert remote_cfg.provider_id == "remote:toy:4"
    assert TrusterConfig().provider_id == HASH_PROVIDER_ID


def test_thresholds_require_finalize() -> None:
    cfg = TrusterConfig()
    with pytest.raises(ConfigError, match="finalize first"):
        cfg.thresholds()
    assert cfg.thresholds(b=25).t2 == pytest.approx(1.8)
    ready = TrusterConfig(b=25)
    assert ready.thresholds().b == 25
