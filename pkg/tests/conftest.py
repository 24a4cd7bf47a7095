from __future__ import annotations

from pathlib import Path

import pytest

from truster.config import TrusterConfig
from truster.workspace import Workspace

REPO = Path(__file__).resolve().parent.parent
DEMO = REPO / "demo"
GOLDEN = Path(__file__).resolve().parent / "golden"


def fresh_demo_config() -> TrusterConfig:
    # finalize mutates config.b, so sharing one instance across workspaces leaks state
    return TrusterConfig.from_file(DEMO / "config.toml")


@pytest.fixture(scope="session")
def demo_config() -> TrusterConfig:
    return fresh_demo_config()


def build_demo_workspace(root: Path, config: TrusterConfig) -> Workspace:
    """Full replay pipeline: build, identity review import, finalize."""
    ws = Workspace.create(root, config)
    ws.build(DEMO / "corpus")
    exported = ws.review_export()
    ws.review_import(exported)
    ws.finalize()
    return ws


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory: pytest.TempPathFactory, demo_config: TrusterConfig) -> Workspace:
    root = tmp_path_factory.mktemp("demo-ws")
    return build_demo_workspace(root / "ws", demo_config)


def read_answer(name: str) -> str:
    return (DEMO / "answers" / name).read_text(encoding="utf-8")


def read_golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")
