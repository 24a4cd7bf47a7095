"""Directed labeled multigraph over extracted triplets, plus the GML and
node-link serializations used for human review.

Subjects and objects become nodes, predicates become edge labels. Edge
identity is the (source label, predicate, target label) triple; parallel
edges are allowed only with distinct labels, self-loops are fine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

from .errors import GmlError
from .triplets import ORIGIN_KNOWLEDGE_BASE, Triplet, TripletSet, normalize_part

EdgeTriple = tuple[str, str, str]  # (source label, predicate, target label)

GRAPH_SOURCE_ID = "graph"


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable graph value; node_id is the position in node_labels."""

    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...]  # (source id, target id, predicate)

    def __post_init__(self) -> None:
        if len(set(self.node_labels)) != len(self.node_labels):
            raise ValueError("node labels must be unique")
        n = len(self.node_labels)
        seen: set[tuple[int, int, str]] = set()
        for source, target, label in self.edges:
            if not (0 <= source < n and 0 <= target < n):
                raise ValueError(f"edge ({source}, {target}, {label!r}) references a missing node")
            if (source, target, label) in seen:
                raise ValueError(f"duplicate edge ({source}, {target}, {label!r})")
            seen.add((source, target, label))

    @cached_property
    def label_to_id(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.node_labels)}

    @property
    def node_count(self) -> int:
        return len(self.node_labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_triples(self) -> set[EdgeTriple]:
        return {
            (self.node_labels[s], label, self.node_labels[t]) for s, t, label in self.edges
        }

    def edge_triple_list(self) -> list[EdgeTriple]:
        """Edge label triples in stored (insertion) order."""
        return [(self.node_labels[s], label, self.node_labels[t]) for s, t, label in self.edges]

    def same_structure(self, other: "KnowledgeGraph") -> bool:
        """Equality on node labels and the edge label-triple set."""
        return set(self.node_labels) == set(other.node_labels) and (
            self.edge_triples() == other.edge_triples()
        )


@dataclass(frozen=True)
class GraphDelta:
    added_edges: tuple[EdgeTriple, ...] = field(default=())
    removed_edges: tuple[EdgeTriple, ...] = field(default=())
    relabeled_nodes: tuple[tuple[str, str], ...] = field(default=())

    @property
    def is_empty(self) -> bool:
        return not (self.added_edges or self.removed_edges or self.relabeled_nodes)

    def summary(self) -> dict[str, int]:
        return {
            "added": len(self.added_edges),
            "removed": len(self.removed_edges),
            "relabeled": len(self.relabeled_nodes),
        }

    def to_dict(self) -> dict:
        return {
            "added_edges": [list(e) for e in self.added_edges],
            "removed_edges": [list(e) for e in self.removed_edges],
            "relabeled_nodes": [list(r) for r in self.relabeled_nodes],
        }


def graph_from_triples(triples: list[EdgeTriple]) -> KnowledgeGraph:
    """Build a graph from label triples, assigning dense ids in appearance order."""
    labels: list[str] = []
    ids: dict[str, int] = {}

    def node_id(label: str) -> int:
        if label not in ids:
            ids[label] = len(labels)
            labels.append(label)
        return ids[label]

    edges = [(node_id(s), node_id(t), p) for s, p, t in triples]
    return KnowledgeGraph(node_labels=tuple(labels), edges=tuple(edges))


def build_graph(triplet_set: TripletSet) -> KnowledgeGraph:
    """One node per distinct subject/object label, one edge per triplet."""
    if not triplet_set.deduplicated:
        raise ValueError("build_graph requires a deduplicated triplet set")
    return graph_from_triples([(t.subject, t.predicate, t.object) for t in triplet_set])


def graph_to_triplets(graph: KnowledgeGraph) -> TripletSet:
    """Inverse of build_graph: one knowledge-base triplet per edge."""
    triplets = tuple(
        Triplet(s, p, o, origin=ORIGIN_KNOWLEDGE_BASE, source_id=GRAPH_SOURCE_ID)
        for s, p, o in graph.edge_triple_list()
    )
    return TripletSet(triplets=triplets, deduplicated=True)


# --- GML serialization ------------------------------------------------------
#
# Writer targets the editor-compatible subset: integer ids, quoted labels,
# `directed 1`. Interior quotes become &quot; (and & becomes &amp; so the
# escaping round-trips); non-ASCII text stays raw UTF-8.


def _escape(label: str) -> str:
    if "\n" in label or "\r" in label:
        raise GmlError(f"label {label!r} contains a line break, unrepresentable in GML")
    return label.replace("&", "&amp;").replace('"', "&quot;")


def _unescape(label: str) -> str:
    return label.replace("&quot;", '"').replace("&amp;", "&")


def to_gml(graph: KnowledgeGraph) -> bytes:
    lines = ["graph [", "  directed 1"]
    for i, label in enumerate(graph.node_labels):
        lines += ["  node [", f"    id {i}", f'    label "{_escape(label)}"', "  ]"]
    for source, target, label in graph.edges:
        lines += [
            "  edge [",
            f"    source {source}",
            f"    target {target}",
            f'    label "{_escape(label)}"',
            "  ]",
        ]
    lines.append("]")
    return ("\n".join(lines) + "\n").encode("utf-8")


_TOKEN = re.compile(r'"[^"]*"|\[|\]|[^\s\[\]"]+')


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if '"' in line and line.count('"') % 2:
            raise GmlError("unterminated string", line=line_no)
        for match in _TOKEN.finditer(line):
            tokens.append((match.group(0), line_no))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, int]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, int]:
        tok = self.peek()
        if tok is None:
            last_line = self.tokens[-1][1] if self.tokens else 1
            raise GmlError("unexpected end of input", line=last_line)
        self.pos += 1
        return tok

    def skip_value(self) -> None:
        """Skip one value: scalar or a bracketed block (editors add extras)."""
        tok, line = self.next()
        if tok != "[":
            return
        depth = 1
        while depth:
            tok, line = self.next()
            if tok == "[":
                depth += 1
            elif tok == "]":
                depth -= 1

    def parse_block(self) -> list[tuple[str, object, int]]:
        """Parse `key value` pairs until the closing bracket; values are
        int, str (from quoted strings) or nested blocks (returned raw)."""
        entries: list[tuple[str, object, int]] = []
        while True:
            tok, line = self.next()
            if tok == "]":
                return entries
            if tok == "[":
                raise GmlError("value without a key", line=line)
            key = tok
            value_tok = self.peek()
            if value_tok is None:
                raise GmlError(f"key {key!r} has no value", line=line)
            if value_tok[0] == "[":
                self.next()
                entries.append((key, self.parse_block(), line))
            elif value_tok[0].startswith('"'):
                self.next()
                entries.append((key, _unescape(value_tok[0][1:-1]), line))
            else:
                self.next()
                raw = value_tok[0]
                try:
                    entries.append((key, int(raw), line))
                except ValueError:
                    entries.append((key, raw, line))


def from_gml(data: bytes | str) -> KnowledgeGraph:
    """Parse the directed-graph GML subset written by to_gml (tolerating the
    extra attributes external editors add)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    parser = _Parser(_tokenize(text))

    tok, line = parser.next()
    while tok != "graph":
        if parser.peek() is None:
            raise GmlError("no graph block found", line=line)
        parser.skip_value()  # e.g. a leading Creator "..." line
        tok, line = parser.next()
    open_tok, line = parser.next()
    if open_tok != "[":
        raise GmlError("expected [ after graph", line=line)
    entries = parser.parse_block()

    directed = None
    nodes: list[tuple[int, str, int]] = []  # (id, label, line)
    edges: list[tuple[int, int, str, int]] = []
    for key, value, line in entries:
        if key == "directed":
            directed = value
        elif key == "node":
            if not isinstance(value, list):
                raise GmlError("node must be a block", line=line)
            attrs = {k: v for k, v, _ in value}
            if not isinstance(attrs.get("id"), int):
                raise GmlError("node block missing integer id", line=line)
            if not isinstance(attrs.get("label"), str):
                raise GmlError(f"node {attrs.get('id')} missing label", line=line)
            nodes.append((attrs["id"], attrs["label"], line))
        elif key == "edge":
            if not isinstance(value, list):
                raise GmlError("edge must be a block", line=line)
            attrs = {k: v for k, v, _ in value}
            if not isinstance(attrs.get("source"), int) or not isinstance(attrs.get("target"), int):
                raise GmlError("edge block missing integer source/target", line=line)
            if not isinstance(attrs.get("label"), str):
                raise GmlError("edge block missing label", line=line)
            edges.append((attrs["source"], attrs["target"], attrs["label"], line))
        # anything else (Creator, graphics, ...) is already consumed

    if directed != 1:
        raise GmlError("graph must declare `directed 1`", line=1)

    id_to_dense: dict[int, int] = {}
    labels: list[str] = []
    for raw_id, label, line in nodes:
        if raw_id in id_to_dense:
            raise GmlError(f"duplicate node id {raw_id}", line=line)
        if label in labels:
            raise GmlError(f"duplicate node label {label!r}", line=line)
        id_to_dense[raw_id] = len(labels)
        labels.append(label)

    dense_edges: list[tuple[int, int, str]] = []
    for source, target, label, line in edges:
        if source not in id_to_dense or target not in id_to_dense:
            missing = source if source not in id_to_dense else target
            raise GmlError(f"edge references undefined node id {missing}", line=line)
        dense_edges.append((id_to_dense[source], id_to_dense[target], label))

    try:
        return KnowledgeGraph(node_labels=tuple(labels), edges=tuple(dense_edges))
    except ValueError as exc:
        raise GmlError(str(exc)) from exc


# --- review support ---------------------------------------------------------


def normalize_graph(graph: KnowledgeGraph) -> KnowledgeGraph:
    """Re-normalize labels after human editing (case, whitespace, trailing
    punctuation). Two node labels collapsing into one is an error: merges
    must be explicit relabels, not typo side effects."""
    new_labels: list[str] = []
    for label in graph.node_labels:
        normalized = normalize_part(label)
        if not normalized:
            raise ValueError(f"node label {label!r} is empty after normalization")
        if normalized in new_labels:
            raise ValueError(
                f"node labels {label!r} and another both normalize to {normalized!r}"
            )
        new_labels.append(normalized)
    edges: list[tuple[int, int, str]] = []
    seen: set[tuple[int, int, str]] = set()
    for s, t, label in graph.edges:
        normalized = normalize_part(label)
        if not normalized:
            raise ValueError(f"edge label {label!r} is empty after normalization")
        edge = (s, t, normalized)
        if edge in seen:
            raise ValueError(f"edges collapse to duplicate {edge} after normalization")
        seen.add(edge)
        edges.append(edge)
    return KnowledgeGraph(node_labels=tuple(new_labels), edges=tuple(edges))


def diff(original: KnowledgeGraph, edited: KnowledgeGraph) -> GraphDelta:
    """Minimal edge-set delta keyed by (source label, predicate, target label).

    Node relabels cannot be inferred from two label-keyed graphs; the review
    API records them explicitly when the editor reports them.
    """
    before = original.edge_triples()
    after = edited.edge_triples()
    return GraphDelta(
        added_edges=tuple(sorted(after - before)),
        removed_edges=tuple(sorted(before - after)),
    )


def apply_delta(graph: KnowledgeGraph, delta: GraphDelta) -> KnowledgeGraph:
    """Replay a delta: relabels first, then edge removals, then additions.

    Deltas capture edge structure; a node that loses every incident edge is
    dropped (full-graph review imports preserve such nodes verbatim instead).
    """
    mapping = dict(delta.relabeled_nodes)
    for old in mapping:
        if old not in graph.label_to_id:
            raise ValueError(f"relabel of unknown node {old!r}")
    relabeled = [
        (mapping.get(s, s), p, mapping.get(t, t)) for s, p, t in graph.edge_triple_list()
    ]
    removed = set(delta.removed_edges)
    # a relabel that merges two nodes can collapse edges; keep the first
    triples: list[EdgeTriple] = []
    existing: set[EdgeTriple] = set()
    for triple in relabeled:
        if triple not in removed and triple not in existing:
            triples.append(triple)
            existing.add(triple)
    for triple in delta.added_edges:
        if triple not in existing:
            triples.append(triple)
            existing.add(triple)
    return graph_from_triples(triples)


def to_node_link(graph: KnowledgeGraph) -> dict:
    """The JSON shape served to the review UI."""
    return {
        "directed": True,
        "nodes": [{"id": i, "label": label} for i, label in enumerate(graph.node_labels)],
        "edges": [
            {"source": s, "target": t, "label": label} for s, t, label in graph.edges
        ],
    }


def from_node_link(data: dict) -> KnowledgeGraph:
    """Parse and validate the review UI's node-link JSON."""
    if not isinstance(data, dict):
        raise ValueError("graph payload must be a JSON object")
    if data.get("directed") is not True:
        raise ValueError('graph payload must set "directed": true')
    nodes = data.get("nodes")
    edges = data.get("edges")
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise ValueError('graph payload must have "nodes" and "edges" arrays')

    id_to_label: dict[int, str] = {}
    labels: list[str] = []
    for node in nodes:
        if not isinstance(node, dict) or not isinstance(node.get("id"), int) or isinstance(node.get("id"), bool):
            raise ValueError("every node needs an integer id")
        label = node.get("label")
        if not isinstance(label, str) or not label.strip():
            raise ValueError(f"node {node.get('id')} needs a non-empty label")
        if node["id"] in id_to_label:
            raise ValueError(f"duplicate node id {node['id']}")
        if label in labels:
            raise ValueError(f"duplicate node label {label!r}")
        id_to_label[node["id"]] = label
        labels.append(label)

    # ids are re-densified in payload node order, so isolated nodes survive
    dense = {raw_id: i for i, raw_id in enumerate(id_to_label)}
    dense_edges: list[tuple[int, int, str]] = []
    seen: set[EdgeTriple] = set()
    for edge in edges:
        if not isinstance(edge, dict):
            raise ValueError("every edge must be an object")
        source, target, label = edge.get("source"), edge.get("target"), edge.get("label")
        if source not in id_to_label or target not in id_to_label:
            raise ValueError(f"edge {edge} references a missing node id")
        if not isinstance(label, str) or not label.strip():
            raise ValueError(f"edge {edge} needs a non-empty label")
        triple = (id_to_label[source], label, id_to_label[target])
        if triple in seen:
            raise ValueError(f"duplicate edge {triple}")
        seen.add(triple)
        dense_edges.append((dense[source], dense[target], label))

    return KnowledgeGraph(node_labels=tuple(labels), edges=tuple(dense_edges))
