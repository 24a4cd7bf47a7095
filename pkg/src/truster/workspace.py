"""Workspace on disk: pipeline state machine plus the stage orchestration.

Layout under the workspace root:

    config.toml           materialized config (paths absolutized, b recorded)
    state.json            {"state": "..."} per STATES below
    corpus.manifest.json  ingested documents and chunk counts
    triplets.csv          deduplicated knowledge-base triplets
    graph.pre.gml         machine-built graph, input to SME review
    graph.export.gml      copy handed out by `review export`
    graph.validated.gml   human-approved graph
    review.delta.json     what the review changed
    truster.idx           embedded sentence index

States move forward only (ingested -> extracted -> graphed -> validated ->
finalized); `force` is the single escape hatch and resets to the state the
command produces. Validation is a human gate: nothing recomputes it away.
"""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass
from pathlib import Path

from . import corpus as corpus_mod
from .config import TrusterConfig
from .embedding import embed_batch, triplet_to_sentence
from .engine import AnswerReport, ThresholdConfig, score_answer
from .errors import StageError, StateError, TrusterError
from .gateway import ChatGateway
from .graph import (
    GraphDelta,
    KnowledgeGraph,
    build_graph,
    diff,
    from_gml,
    graph_to_triplets,
    normalize_graph,
    to_gml,
)
from .index import IndexEntry, VectorIndex
from .triplets import (
    ORIGIN_KNOWLEDGE_BASE,
    PromptPair,
    TripletSet,
    extract_triplets,
    merge,
    read_csv,
    write_csv,
)

logger = logging.getLogger(__name__)

STATES = ("ingested", "extracted", "graphed", "validated", "finalized")

CONFIG_FILE = "config.toml"
STATE_FILE = "state.json"
MANIFEST_FILE = "corpus.manifest.json"
TRIPLETS_FILE = "triplets.csv"
PRE_GRAPH_FILE = "graph.pre.gml"
EXPORT_GRAPH_FILE = "graph.export.gml"
VALIDATED_GRAPH_FILE = "graph.validated.gml"
DELTA_FILE = "review.delta.json"
INDEX_FILE = "truster.idx"


def state_rank(state: str) -> int:
    try:
        return STATES.index(state)
    except ValueError:
        raise StateError(f"unknown workspace state {state!r}") from None


@dataclass
class Workspace:
    root: Path
    config: TrusterConfig

    # --- paths ---------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_FILE

    @property
    def state_path(self) -> Path:
        return self.root / STATE_FILE

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def triplets_path(self) -> Path:
        return self.root / TRIPLETS_FILE

    @property
    def pre_graph_path(self) -> Path:
        return self.root / PRE_GRAPH_FILE

    @property
    def export_graph_path(self) -> Path:
        return self.root / EXPORT_GRAPH_FILE

    @property
    def validated_graph_path(self) -> Path:
        return self.root / VALIDATED_GRAPH_FILE

    @property
    def delta_path(self) -> Path:
        return self.root / DELTA_FILE

    @property
    def index_path(self) -> Path:
        return self.root / INDEX_FILE

    # --- lifecycle -----------------------------------------------------------

    @classmethod
    def create(cls, root: Path | str, config: TrusterConfig, *, force: bool = False) -> "Workspace":
        root = Path(root)
        ws = cls(root=root, config=config)
        if ws.state_path.exists() and not force:
            raise StateError(
                f"{root} already holds a workspace in state {ws.read_state()!r}; "
                "pass --force to rebuild"
            )
        root.mkdir(parents=True, exist_ok=True)
        config.write(ws.config_path)
        return ws

    @classmethod
    def open(cls, root: Path | str) -> "Workspace":
        root = Path(root)
        config_path = root / CONFIG_FILE
        if not config_path.exists():
            raise StateError(f"{root} is not a workspace (missing {CONFIG_FILE})")
        return cls(root=root, config=TrusterConfig.from_file(config_path))

    def read_state(self) -> str | None:
        if not self.state_path.exists():
            return None
        data = json.loads(self.state_path.read_text(encoding="utf-8"))
        state = data.get("state")
        state_rank(state)
        return state

    def write_state(self, state: str) -> None:
        state_rank(state)
        self.state_path.write_text(
            json.dumps({"state": state}, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def require_state(self, minimum: str, *, command: str) -> str:
        state = self.read_state()
        if state is None or state_rank(state) < state_rank(minimum):
            raise StateError(
                f"`{command}` needs the workspace in state {minimum!r} or later, "
                f"found {state!r}"
            )
        return state

    def _save_config(self) -> None:
        self.config.write(self.config_path)

    # --- stage helpers -------------------------------------------------------

    def gateway(self) -> ChatGateway:
        return ChatGateway(self.config.llm_config())

    def prompts(self) -> PromptPair:
        return PromptPair.load(self.config.prompts_dir)

    def load_index(self) -> VectorIndex:
        if not self.index_path.exists():
            raise StateError("no index found; run `finalize` first")
        return VectorIndex.load(self.index_path, expected_provider_id=self.config.provider_id)

    # --- build ---------------------------------------------------------------

    def build(self, corpus_dir: Path | str, *, force: bool = False) -> KnowledgeGraph:
        """ingest -> chunk -> extract -> CSV -> graph -> graph.pre.gml."""
        state = self.read_state()
        if state is not None and not force:
            raise StateError(
                f"workspace is already in state {state!r}; pass --force to rebuild"
            )

        corpus_dir = Path(corpus_dir)
        try:
            paths = corpus_mod.discover_corpus_files(corpus_dir)
            if not paths:
                raise TrusterError(f"no corpus files (*.txt, *.md) under {corpus_dir}")
            documents = corpus_mod.ingest(paths)
        except TrusterError as exc:
            raise StageError("ingest", str(exc)) from exc

        chunks_by_doc = {
            doc.doc_id: corpus_mod.chunk(doc, max_chunk_chars=self.config.max_chunk_chars)
            for doc in documents
        }
        manifest = {
            "documents": [
                {
                    "doc_id": doc.doc_id,
                    "file": Path(doc.source_path).name,
                    "word_count": doc.word_count,
                    "chunks": len(chunks_by_doc[doc.doc_id]),
                }
                for doc in documents
            ],
            "max_chunk_chars": self.config.max_chunk_chars,
        }
        self.manifest_path.write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        self.write_state("ingested")
        logger.info("ingested %d documents", len(documents))

        try:
            gateway = self.gateway()
            prompts = self.prompts()
            extracted = [
                extract_triplets(
                    c.text,
                    gateway,
                    prompts,
                    origin=ORIGIN_KNOWLEDGE_BASE,
                    source_id=c.source_id,
                )
                for doc in documents
                for c in chunks_by_doc[doc.doc_id]
            ]
        except TrusterError as exc:
            raise StageError("extract", str(exc)) from exc
        triplet_set = merge(extracted).dedup()
        if not len(triplet_set):
            raise StageError("extract", "the corpus produced no triplets")
        write_csv(triplet_set, self.triplets_path)
        self.write_state("extracted")
        logger.info("extracted %d unique triplets", len(triplet_set))

        try:
            graph = build_graph(triplet_set)
        except (TrusterError, ValueError) as exc:
            raise StageError("graph", str(exc)) from exc
        self.pre_graph_path.write_bytes(to_gml(graph))
        self.write_state("graphed")
        logger.info("graph has %d nodes, %d edges", graph.node_count, graph.edge_count)
        return graph

    # --- review --------------------------------------------------------------

    def load_pre_graph(self) -> KnowledgeGraph:
        self.require_state("graphed", command="review")
        return from_gml(self.pre_graph_path.read_bytes())

    def review_export(self) -> Path:
        self.require_state("graphed", command="review export")
        shutil.copyfile(self.pre_graph_path, self.export_graph_path)
        return self.export_graph_path

    def review_import(self, edited_path: Path | str, *, force: bool = False) -> GraphDelta:
        state = self.require_state("graphed", command="review import")
        if state_rank(state) > state_rank("graphed") and not force:
            raise StateError(
                f"workspace is already {state!r}; pass --force to re-review"
            )
        original = from_gml(self.pre_graph_path.read_bytes())
        try:
            edited = normalize_graph(from_gml(Path(edited_path).read_bytes()))
        except (TrusterError, ValueError, OSError) as exc:
            # reject without touching workspace state
            raise StageError("review", f"edited graph rejected: {exc}") from exc
        delta = diff(original, edited)
        self.commit_review(edited, delta)
        return delta

    def commit_review(self, validated: KnowledgeGraph, delta: GraphDelta) -> None:
        self.validated_graph_path.write_bytes(to_gml(validated))
        self.delta_path.write_text(
            json.dumps(delta.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        self.write_state("validated")
        logger.info("review committed: %s", delta.summary())

    def load_validated_graph(self) -> KnowledgeGraph:
        self.require_state("validated", command="finalize")
        return from_gml(self.validated_graph_path.read_bytes())

    # --- finalize -------------------------------------------------------------

    def finalize(self, *, force: bool = False) -> VectorIndex:
        """validated graph -> triplets -> sentences -> embeddings -> index."""
        state = self.require_state("validated", command="finalize")
        if state == "finalized" and not force:
            raise StateError("workspace is already finalized; pass --force to redo")
        graph = from_gml(self.validated_graph_path.read_bytes())
        triplet_set = graph_to_triplets(graph)
        if not len(triplet_set):
            raise StageError("finalize", "validated graph has no edges to index")
        sentences = [triplet_to_sentence(t) for t in triplet_set]
        try:
            provider = self.config.provider()
            embedded = embed_batch(sentences, provider)
        except TrusterError as exc:
            raise StageError("embed", str(exc)) from exc

        index = VectorIndex(provider_id=provider.provider_id, dimension=provider.dimension)
        index.upsert(
            IndexEntry(
                entry_id=f"s{i:04d}",
                vector=e.vector,
                sentence_text=e.sentence.text,
            )
            for i, e in enumerate(embedded)
        )
        # build fully in memory first so a failed run never leaves a partial file
        index.persist(self.index_path)
        self.config.b = len(embedded)
        self._save_config()
        self.write_state("finalized")
        logger.info("finalized: %d sentences indexed (b=%d)", len(index), self.config.b)
        return index

    # --- validation ------------------------------------------------------------

    def thresholds(self) -> ThresholdConfig:
        return self.config.thresholds()

    def score_text(self, question: str, answer_text: str) -> AnswerReport:
        self.require_state("finalized", command="score")
        index = self.load_index()
        return score_answer(
            question,
            answer_text,
            gateway=self.gateway(),
            prompts=self.prompts(),
            provider=self.config.provider(),
            index=index,
            cfg=self.thresholds(),
        )

    def ask(self, question: str) -> tuple[str, AnswerReport]:
        """Send the question to the target LLM, then score its answer."""
        self.require_state("finalized", command="ask")
        question = question.strip()
        if not question:
            raise TrusterError("question is empty")
        try:
            answer = self.gateway().chat_complete(
                assistant_instructions="", user_content=question
            ).strip()
        except TrusterError as exc:
            raise StageError("ask", str(exc)) from exc
        return answer, self.score_text(question, answer)

    def read_triplets(self) -> TripletSet:
        return read_csv(self.triplets_path)
