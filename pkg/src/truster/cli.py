"""Command-line entry point.

    truster build --corpus <dir> --workspace <dir>
    truster review export | import <file> | serve --port <n>
    truster finalize
    truster ask --question <text> [--json]
    truster score --answer-file <path> [--json]

Global: --config <path>, --workspace <dir>, --mode {live|record|replay}.
`build` creates the workspace from the config file (or defaults); every
later command reads the workspace's own materialized config.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .config import TrusterConfig
from .engine import AnswerReport, render_report
from .errors import TrusterError
from .gateway import MODES
from .workspace import Workspace

logger = logging.getLogger(__name__)


@dataclass
class AppContext:
    config_path: Path | None
    workspace_dir: Path
    mode: str | None

    def load_config(self) -> TrusterConfig:
        if self.config_path is not None:
            config = TrusterConfig.from_file(self.config_path)
        else:
            config = TrusterConfig().resolved_against(Path.cwd())
        if self.mode is not None:
            config.mode = self.mode
        return config

    def open_workspace(self) -> Workspace:
        ws = Workspace.open(self.workspace_dir)
        if self.config_path is not None:
            ws.config = TrusterConfig.from_file(self.config_path)
            if ws.config.b == 0:
                # keep the b recorded at finalize when the override omits it
                ws.config.b = TrusterConfig.from_file(ws.config_path).b
        if self.mode is not None:
            ws.config.mode = self.mode
        return ws


def _fail(exc: Exception) -> "click.ClickException":
    message = str(exc) or exc.__class__.__name__
    return click.ClickException(message)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Config file (flat key = value).",
)
@click.option(
    "--workspace",
    "workspace_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("workspace"),
    show_default=True,
    help="Workspace directory.",
)
@click.option(
    "--mode",
    type=click.Choice(MODES),
    default=None,
    help="Override the configured gateway mode.",
)
@click.option("-v", "--verbose", is_flag=True, help="Log pipeline progress.")
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    workspace_dir: Path,
    mode: str | None,
    verbose: bool,
) -> None:
    """Measure how compatible LLM answers are with a validated body of knowledge."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,  # rebind on every invocation; long-lived processes reuse us
    )
    ctx.obj = AppContext(config_path=config_path, workspace_dir=workspace_dir, mode=mode)


@main.command()
@click.option(
    "--corpus",
    "corpus_dir",
    required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Directory of corpus files (*.txt, *.md).",
)
@click.option(
    "--workspace",
    "workspace_override",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Workspace directory (overrides the global option).",
)
@click.option("--force", is_flag=True, help="Rebuild over an existing workspace.")
@click.pass_obj
def build(app: AppContext, corpus_dir: Path, workspace_override: Path | None, force: bool) -> None:
    """Corpus -> triplets -> knowledge graph, ready for review."""
    root = workspace_override or app.workspace_dir
    try:
        ws = Workspace.create(root, app.load_config(), force=force)
        graph = ws.build(corpus_dir, force=force)
    except TrusterError as exc:
        raise _fail(exc) from exc
    click.echo(f"workspace: {ws.root}")
    click.echo(f"graph: {graph.node_count} nodes, {graph.edge_count} edges")
    click.echo("state: graphed (run `truster review` next)")


@main.group()
def review() -> None:
    """SME review of the extracted graph."""


@review.command("export")
@click.pass_obj
def review_export(app: AppContext) -> None:
    """Copy the pre-edit graph out for external editing."""
    try:
        path = app.open_workspace().review_export()
    except TrusterError as exc:
        raise _fail(exc) from exc
    click.echo(f"exported: {path}")


@review.command("import")
@click.argument("edited_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--force", is_flag=True, help="Re-review an already validated workspace.")
@click.pass_obj
def review_import(app: AppContext, edited_file: Path, force: bool) -> None:
    """Validate an edited GML file and record the changes."""
    try:
        delta = app.open_workspace().review_import(edited_file, force=force)
    except TrusterError as exc:
        raise _fail(exc) from exc
    summary = delta.summary()
    click.echo(
        f"delta: {summary['added']} added, {summary['removed']} removed, "
        f"{summary['relabeled']} relabeled"
    )
    click.echo("state: validated (run `truster finalize` next)")


@review.command("serve")
@click.option("--port", type=int, default=8400, show_default=True)
@click.option(
    "--ui-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Built web UI to serve at / (defaults to frontend/dist when present).",
)
@click.pass_obj
def review_serve(app: AppContext, port: int, ui_dir: Path | None) -> None:
    """Host the review API + UI until the SME approves."""
    from .review import serve_review

    try:
        ws = app.open_workspace()
        ws.require_state("graphed", command="review serve")
        delta = serve_review(ws, port, ui_dir=ui_dir)
    except TrusterError as exc:
        raise _fail(exc) from exc
    summary = delta.summary()
    click.echo(
        f"approved: {summary['added']} added, {summary['removed']} removed, "
        f"{summary['relabeled']} relabeled"
    )
    click.echo("state: validated (run `truster finalize` next)")


@main.command()
@click.option("--force", is_flag=True, help="Re-finalize an already finalized workspace.")
@click.pass_obj
def finalize(app: AppContext, force: bool) -> None:
    """Validated graph -> sentences -> embeddings -> persisted index."""
    try:
        ws = app.open_workspace()
        index = ws.finalize(force=force)
    except TrusterError as exc:
        raise _fail(exc) from exc
    click.echo(f"indexed {len(index)} knowledge-base sentences (b={len(index)})")
    click.echo(f"thresholds: t1={ws.config.t1:g} a={ws.config.a:g} t2={ws.thresholds().t2:g}")
    click.echo("state: finalized")


def _emit_report(report: AnswerReport, as_json: bool) -> None:
    if as_json:
        payload = report.to_dict()
        payload["report"] = render_report(report)
        click.echo(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        click.echo(render_report(report), nl=False)


@main.command()
@click.option("--question", required=True, help="Question for the target LLM.")
@click.option("--json", "as_json", is_flag=True, help="Emit the machine-readable report.")
@click.pass_obj
def ask(app: AppContext, question: str, as_json: bool) -> None:
    """Ask the LLM, then score its answer against the knowledge base."""
    try:
        answer, report = app.open_workspace().ask(question)
    except TrusterError as exc:
        raise _fail(exc) from exc
    if not as_json:
        click.echo(f"Answer: {answer}")
        click.echo("")
    _emit_report(report, as_json)


@main.command()
@click.option(
    "--answer-file",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Text file holding the answer to score.",
)
@click.option("--question", default="", help="Question the answer responds to (metadata only).")
@click.option("--json", "as_json", is_flag=True, help="Emit the machine-readable report.")
@click.pass_obj
def score(app: AppContext, answer_file: Path, question: str, as_json: bool) -> None:
    """Score answer text offline (no LLM call for the answer itself)."""
    try:
        answer_text = answer_file.read_text(encoding="utf-8")
        report = app.open_workspace().score_text(question, answer_text)
    except TrusterError as exc:
        raise _fail(exc) from exc
    _emit_report(report, as_json)


if __name__ == "__main__":
    main()
