"""End-to-end CLI flows over the replay fixtures."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from truster.cli import main
from truster.workspace import Workspace

from conftest import DEMO, GOLDEN, build_demo_workspace, fresh_demo_config


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture(scope="module")
def finalized_root(tmp_path_factory: pytest.TempPathFactory) -> Path:
    root = tmp_path_factory.mktemp("cli-ws") / "ws"
    build_demo_workspace(root, fresh_demo_config())
    return root


@pytest.fixture()
def ws_root(finalized_root: Path, tmp_path: Path) -> Path:
    root = tmp_path / "ws"
    shutil.copytree(finalized_root, root)
    return root


def invoke(runner: CliRunner, *args: str):
    return runner.invoke(main, list(args), catch_exceptions=False)


def test_full_pipeline_via_cli(runner: CliRunner, tmp_path: Path) -> None:
    ws = str(tmp_path / "ws")
    config = str(DEMO / "config.toml")

    result = invoke(
        runner, "--config", config, "--workspace", ws, "build", "--corpus", str(DEMO / "corpus")
    )
    assert result.exit_code == 0, result.output
    assert "graph: 23 nodes, 25 edges" in result.output
    assert "state: graphed" in result.output

    result = invoke(runner, "--workspace", ws, "review", "export")
    assert result.exit_code == 0, result.output
    exported = result.output.split("exported: ", 1)[1].strip()
    assert Path(exported).is_file()

    result = invoke(runner, "--workspace", ws, "review", "import", exported)
    assert result.exit_code == 0, result.output
    assert "delta: 0 added, 0 removed, 0 relabeled" in result.output

    result = invoke(runner, "--workspace", ws, "finalize")
    assert result.exit_code == 0, result.output
    assert "indexed 25 knowledge-base sentences (b=25)" in result.output
    assert "thresholds: t1=0.6 a=0.12 t2=1.8" in result.output

    result = invoke(
        runner, "--workspace", ws, "score", "--answer-file", str(DEMO / "answers" / "materials.txt")
    )
    assert result.exit_code == 0, result.output
    assert result.stdout == (GOLDEN / "report_materials.txt").read_text(encoding="utf-8")


def test_score_matches_golden_reports(runner: CliRunner, ws_root: Path) -> None:
    for name in ("money", "football", "noise"):
        result = invoke(
            runner,
            "--workspace",
            str(ws_root),
            "score",
            "--answer-file",
            str(DEMO / "answers" / f"{name}.txt"),
        )
        assert result.exit_code == 0, result.output
        assert result.stdout == (GOLDEN / f"report_{name}.txt").read_text(encoding="utf-8")


def test_score_json_output(runner: CliRunner, ws_root: Path) -> None:
    result = invoke(
        runner,
        "--workspace",
        str(ws_root),
        "score",
        "--answer-file",
        str(DEMO / "answers" / "money.txt"),
        "--question",
        "What do suppliers provide?",
        "--json",
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["question"] == "What do suppliers provide?"
    assert payload["answer_verdict"] == "minimal"
    assert payload["sentences"][0]["verdict"] == "minimal"
    assert payload["report"].startswith("---Query: suppliers provide money")


def test_ask_prints_answer_then_report(runner: CliRunner, ws_root: Path) -> None:
    result = invoke(
        runner, "--workspace", str(ws_root), "ask", "--question", "What do suppliers provide?"
    )
    assert result.exit_code == 0, result.output
    assert result.stdout.startswith("Answer: Suppliers provide materials.\n\n")
    assert "---Query: suppliers provide materials" in result.output
    assert "compatible with the knowledge base" in result.output


def test_build_rejects_missing_corpus(runner: CliRunner, tmp_path: Path) -> None:
    result = runner.invoke(
        main, ["--workspace", str(tmp_path / "ws"), "build", "--corpus", str(tmp_path / "nope")]
    )
    assert result.exit_code == 2  # click's own path validation
    assert "does not exist" in result.output


def test_finalize_before_review_fails_cleanly(runner: CliRunner, tmp_path: Path) -> None:
    ws = str(tmp_path / "ws")
    invoke(
        runner,
        "--config",
        str(DEMO / "config.toml"),
        "--workspace",
        ws,
        "build",
        "--corpus",
        str(DEMO / "corpus"),
    )
    result = runner.invoke(main, ["--workspace", ws, "finalize"])
    assert result.exit_code == 1
    assert "Error:" in result.output
    assert "validated" in result.output


def test_score_on_fresh_dir_fails_cleanly(runner: CliRunner, tmp_path: Path) -> None:
    result = runner.invoke(
        main,
        [
            "--workspace",
            str(tmp_path / "empty"),
            "score",
            "--answer-file",
            str(DEMO / "answers" / "money.txt"),
        ],
    )
    assert result.exit_code == 1
    assert "not a workspace" in result.output


def test_build_twice_mentions_force(runner: CliRunner, ws_root: Path) -> None:
    result = runner.invoke(
        main, ["--workspace", str(ws_root), "build", "--corpus", str(DEMO / "corpus")]
    )
    assert result.exit_code == 1
    assert "--force" in result.output


def test_mode_override_reaches_workspace_config(runner: CliRunner, ws_root: Path) -> None:
    # replay fixtures exist, so record mode without an API key must fail
    # before anything else happens: proof the override is honored
    result = runner.invoke(
        main,
        [
            "--workspace",
            str(ws_root),
            "--mode",
            "record",
            "score",
            "--answer-file",
            str(DEMO / "answers" / "money.txt"),
        ],
        env={"TRUSTER_LLM_API_KEY": "", "TRUSTER_EMBED_API_KEY": ""},
    )
    assert result.exit_code == 1
    assert "API key" in result.output


def test_verbose_logs_to_stderr(runner: CliRunner, tmp_path: Path) -> None:
    ws = str(tmp_path / "ws")
    result = runner.invoke(
        main,
        [
            "--config",
            str(DEMO / "config.toml"),
            "--workspace",
            ws,
            "-v",
            "build",
            "--corpus",
            str(DEMO / "corpus"),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert "graph: 23 nodes, 25 edges" in result.stdout
    assert "extracted 25 unique triplets" in result.stderr


def test_review_serve_requires_graphed(runner: CliRunner, tmp_path: Path) -> None:
    Workspace.create(tmp_path / "ws", fresh_demo_config())
    result = runner.invoke(main, ["--workspace", str(tmp_path / "ws"), "review", "serve"])
    assert result.exit_code == 1
    assert "review serve" in result.output
