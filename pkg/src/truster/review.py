"""HTTP review service for SME validation of the knowledge graph.

Three endpoints, consumed by the bundled web UI or any HTTP client:

    GET  /api/graph    current graph as node-link JSON
    PUT  /api/graph    replace with the full edited graph (plus optional
                       explicit relabels for merge bookkeeping)
    POST /api/approve  persist the validated graph + delta, stop serving

Every error body is `{"error": <message>}`. The server binds loopback only;
review is a local, single-SME affair.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import TrusterError
from .graph import GraphDelta, KnowledgeGraph, apply_delta, diff, from_node_link, normalize_graph, to_node_link
from .triplets import normalize_part
from .workspace import Workspace

logger = logging.getLogger(__name__)

DEFAULT_UI_DIR = Path("frontend") / "dist"


class ReviewSession:
    """Mutable review state behind one lock: current graph, explicit
    relabels relative to the original, approval latch."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self.original = workspace.load_pre_graph()
        self.current = self.original
        self.relabels: tuple[tuple[str, str], ...] = ()
        self.approved = False
        self._lock = threading.Lock()

    def snapshot(self) -> KnowledgeGraph:
        with self._lock:
            return self.current

    def compute_delta(self) -> GraphDelta:
        relabeled = apply_delta(self.original, GraphDelta(relabeled_nodes=self.relabels))
        edge_delta = diff(relabeled, self.current)
        return GraphDelta(
            added_edges=edge_delta.added_edges,
            removed_edges=edge_delta.removed_edges,
            relabeled_nodes=self.relabels,
        )

    def update(self, graph: KnowledgeGraph, relabels: tuple[tuple[str, str], ...]) -> GraphDelta:
        with self._lock:
            if self.approved:
                raise ReviewClosedError("review already approved")
            self.current = graph
            self.relabels = relabels
            return self.compute_delta()

    def approve(self) -> GraphDelta:
        with self._lock:
            if self.approved:
                raise ReviewClosedError("review already approved")
            delta = self.compute_delta()
            self.workspace.commit_review(self.current, delta)
            self.approved = True
            return delta


class ReviewClosedError(TrusterError):
    """Mutation attempted after the SME approved."""


def _parse_relabels(raw: object, original: KnowledgeGraph) -> tuple[tuple[str, str], ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ValueError("relabeled_nodes must be a list of [old, new] pairs")
    pairs: list[tuple[str, str]] = []
    seen_old: set[str] = set()
    for item in raw:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ValueError(f"bad relabel entry {item!r}; expected [old, new]")
        old, new = item
        if not isinstance(old, str) or not isinstance(new, str):
            raise ValueError(f"relabel entry {item!r} must hold two strings")
        new = normalize_part(new)
        if not new:
            raise ValueError(f"relabel of {old!r} to an empty label")
        if old not in original.label_to_id:
            raise ValueError(f"relabel of unknown node {old!r}")
        if old in seen_old:
            raise ValueError(f"node {old!r} relabeled twice")
        seen_old.add(old)
        if old != new:
            pairs.append((old, new))
    return tuple(pairs)


def create_app(
    session: ReviewSession,
    *,
    request_shutdown: Callable[[], None] | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="truster review", docs_url=None, redoc_url=None)

    def error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message})

    @app.exception_handler(Exception)
    async def unhandled(_request: Request, exc: Exception) -> JSONResponse:
        logger.exception("review API error")
        return error(500, str(exc))

    @app.get("/api/graph")
    async def get_graph() -> JSONResponse:
        return JSONResponse(to_node_link(session.snapshot()))

    @app.put("/api/graph")
    async def put_graph(request: Request) -> JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return error(400, "request body is not valid JSON")
        try:
            relabels = _parse_relabels(
                body.get("relabeled_nodes") if isinstance(body, dict) else None,
                session.original,
            )
            graph = normalize_graph(from_node_link(body))
            delta = session.update(graph, relabels)
        except ReviewClosedError as exc:
            return error(409, str(exc))
        except (TrusterError, ValueError) as exc:
            return error(400, str(exc))
        return JSONResponse({"ok": True, "delta": delta.to_dict()})

    @app.post("/api/approve")
    async def approve() -> JSONResponse:
        try:
            delta = session.approve()
        except ReviewClosedError as exc:
            return error(409, str(exc))
        except (TrusterError, ValueError) as exc:
            return error(400, str(exc))
        if request_shutdown is not None:
            request_shutdown()
        return JSONResponse({"ok": True, "state": "validated", "delta": delta.to_dict()})

    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/")
        async def placeholder() -> JSONResponse:
            return JSONResponse(
                {
                    "message": "review API is running; the web UI is not built",
                    "endpoints": ["GET /api/graph", "PUT /api/graph", "POST /api/approve"],
                }
            )

    return app


def serve_review(workspace: Workspace, port: int, *, ui_dir: Path | None = None) -> GraphDelta:
    """Serve until the SME approves; returns the committed delta."""
    import uvicorn

    session = ReviewSession(workspace)
    if ui_dir is None and DEFAULT_UI_DIR.is_dir():
        ui_dir = DEFAULT_UI_DIR

    server_holder: dict[str, uvicorn.Server] = {}

    def request_shutdown() -> None:
        server = server_holder.get("server")
        if server is not None:
            server.should_exit = True

    app = create_app(session, request_shutdown=request_shutdown, ui_dir=ui_dir)
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    server_holder["server"] = server
    logger.info("review server on http://127.0.0.1:%d", port)
    server.run()
    if not session.approved:
        raise TrusterError("review server stopped before approval; state unchanged")
    return session.compute_delta()
