// Editable in-memory view of the served knowledge graph.
//
// Architecture rule: the view is never mutated directly. Every change goes
// through an EditAction that is validated, applied, and appended to an
// ordered log. Replaying the log over the loaded graph must reproduce the
// current view exactly; that property is what makes the log safe to persist
// across refreshes and safe to undo by re-folding a shorter prefix.

import type {
  EditAction,
  GraphDelta,
  NodeLinkGraph,
  PutGraphPayload,
  Triple,
} from "./types";

/** Raised for any edit or payload the store refuses. */
export class EditError extends Error {}

const TERMINAL_PUNCT = ".,;:!?";

/**
 * Canonical label form: control characters to spaces, whitespace collapsed,
 * trimmed, lowercased, terminal punctuation stripped.
 *
 * Must match what the review server stores, or client-side merge detection
 * would disagree with the graph the server actually builds from our PUT.
 */
export function normalizeLabel(raw: string): string {
  let s = raw.replace(/[\x00-\x1f\x7f-\x9f]/g, " ");
  s = s.replace(/\s+/g, " ").trim().toLowerCase();
  while (s.length > 0) {
    const last = s[s.length - 1]!;
    if (!TERMINAL_PUNCT.includes(last) && !/\s/.test(last)) break;
    s = s.slice(0, -1);
  }
  return s;
}

/** Label-keyed graph value; node order and edge order are preserved. */
export interface GraphState {
  nodes: string[];
  edges: Triple[];
}

function tripleKey(t: Triple): string {
  return JSON.stringify(t);
}

function describeEdge(source: string, predicate: string, target: string): string {
  return `(${source}, ${predicate}, ${target})`;
}

function compareTriples(a: Triple, b: Triple): number {
  for (let i = 0; i < 3; i++) {
    if (a[i]! < b[i]!) return -1;
    if (a[i]! > b[i]!) return 1;
  }
  return 0;
}

function comparePairs(a: [string, string], b: [string, string]): number {
  if (a[0] !== b[0]) return a[0] < b[0] ? -1 : 1;
  return a[1] < b[1] ? -1 : a[1] > b[1] ? 1 : 0;
}

function cloneState(state: GraphState): GraphState {
  return {
    nodes: [...state.nodes],
    edges: state.edges.map((e) => [...e] as Triple),
  };
}

/**
 * Parse and validate the node-link JSON served by GET /api/graph.
 * The payload crosses a trust boundary, so everything is checked.
 */
export function fromNodeLink(payload: unknown): GraphState {
  if (typeof payload !== "object" || payload === null) {
    throw new EditError("graph payload must be a JSON object");
  }
  const data = payload as Record<string, unknown>;
  if (data.directed !== true) {
    throw new EditError('graph payload must set "directed": true');
  }
  if (!Array.isArray(data.nodes) || !Array.isArray(data.edges)) {
    throw new EditError('graph payload must have "nodes" and "edges" arrays');
  }

  const labelOf = new Map<number, string>();
  const nodes: string[] = [];
  for (const raw of data.nodes) {
    const node = raw as Record<string, unknown>;
    const id = node?.id;
    const label = node?.label;
    if (typeof id !== "number" || !Number.isInteger(id)) {
      throw new EditError("every node needs an integer id");
    }
    if (typeof label !== "string" || label.trim() === "") {
      throw new EditError(`node ${id} needs a non-empty label`);
    }
    if (labelOf.has(id)) throw new EditError(`duplicate node id ${id}`);
    if (nodes.includes(label)) throw new EditError(`duplicate node label '${label}'`);
    labelOf.set(id, label);
    nodes.push(label);
  }

  const edges: Triple[] = [];
  const seen = new Set<string>();
  for (const raw of data.edges) {
    const edge = raw as Record<string, unknown>;
    const source = labelOf.get(edge?.source as number);
    const target = labelOf.get(edge?.target as number);
    const label = edge?.label;
    if (source === undefined || target === undefined) {
      throw new EditError(`edge references an unknown node id: ${JSON.stringify(raw)}`);
    }
    if (typeof label !== "string" || label.trim() === "") {
      throw new EditError(`edge ${source} -> ${target} needs a non-empty label`);
    }
    const triple: Triple = [source, label, target];
    const key = tripleKey(triple);
    if (seen.has(key)) throw new EditError(`duplicate edge ${describeEdge(...triple)}`);
    seen.add(key);
    edges.push(triple);
  }
  return { nodes, edges };
}

export function toNodeLink(state: GraphState): NodeLinkGraph {
  const idOf = new Map(state.nodes.map((label, i) => [label, i]));
  return {
    directed: true,
    nodes: state.nodes.map((label, i) => ({ id: i, label })),
    edges: state.edges.map(([s, p, t]) => ({
      source: idOf.get(s)!,
      target: idOf.get(t)!,
      label: p,
    })),
  };
}

/**
 * Apply one action to a state, returning a new state. Pure: this is the
 * single definition of edit semantics, used both for live edits and for
 * replaying persisted logs.
 */
export function applyAction(state: GraphState, action: EditAction): GraphState {
  const next = cloneState(state);
  const keys = new Set(next.edges.map(tripleKey));

  switch (action.kind) {
    case "add_edge": {
      const { source, predicate, target } = action;
      if (!source || !predicate || !target) {
        throw new EditError("add_edge needs non-empty source, predicate and target");
      }
      if (keys.has(tripleKey([source, predicate, target]))) {
        throw new EditError(`edge already exists: ${describeEdge(source, predicate, target)}`);
      }
      // endpoints may name brand-new nodes; they are created here
      if (!next.nodes.includes(source)) next.nodes.push(source);
      if (!next.nodes.includes(target)) next.nodes.push(target);
      next.edges.push([source, predicate, target]);
      return next;
    }

    case "remove_edge": {
      const { source, predicate, target } = action;
      const key = tripleKey([source, predicate, target]);
      const index = next.edges.findIndex((e) => tripleKey(e) === key);
      if (index < 0) {
        throw new EditError(`no such edge: ${describeEdge(source, predicate, target)}`);
      }
      next.edges.splice(index, 1);
      return next;
    }

    case "relabel_node": {
      const { from, to } = action;
      if (!next.nodes.includes(from)) throw new EditError(`unknown node '${from}'`);
      if (!to) throw new EditError("new label must not be empty");
      if (to === from) throw new EditError(`node is already labeled '${to}'`);
      if (next.nodes.includes(to)) {
        // merge: `to` keeps its position, `from` disappears
        next.nodes = next.nodes.filter((n) => n !== from);
      } else {
        next.nodes = next.nodes.map((n) => (n === from ? to : n));
      }
      const rewritten = next.edges.map(
        ([s, p, t]): Triple => [s === from ? to : s, p, t === from ? to : t],
      );
      // a merge can collapse parallel edges onto one triple; keep the first
      const dedup: Triple[] = [];
      const seen = new Set<string>();
      for (const triple of rewritten) {
        const key = tripleKey(triple);
        if (!seen.has(key)) {
          seen.add(key);
          dedup.push(triple);
        }
      }
      next.edges = dedup;
      return next;
    }

    case "remove_node": {
      const { label } = action;
      if (!next.nodes.includes(label)) throw new EditError(`unknown node '${label}'`);
      const incident = next.edges.filter(([s, , t]) => s === label || t === label);
      const recorded = [...action.removed_edges].sort(compareTriples).map(tripleKey);
      const actual = [...incident].sort(compareTriples).map(tripleKey);
      if (recorded.join("\n") !== actual.join("\n")) {
        // the record no longer matches this graph; refuse rather than lose edges silently
        throw new EditError(`stale remove_node record for '${label}'`);
      }
      next.nodes = next.nodes.filter((n) => n !== label);
      next.edges = next.edges.filter(([s, , t]) => s !== label && t !== label);
      return next;
    }

    case "relabel_edge": {
      const { source, target, predicate, new_predicate } = action;
      const key = tripleKey([source, predicate, target]);
      const index = next.edges.findIndex((e) => tripleKey(e) === key);
      if (index < 0) {
        throw new EditError(`no such edge: ${describeEdge(source, predicate, target)}`);
      }
      if (!new_predicate) throw new EditError("new predicate must not be empty");
      if (new_predicate === predicate) {
        throw new EditError(`edge predicate is already '${predicate}'`);
      }
      if (keys.has(tripleKey([source, new_predicate, target]))) {
        throw new EditError(
          `edge already exists: ${describeEdge(source, new_predicate, target)}`,
        );
      }
      next.edges[index] = [source, new_predicate, target];
      return next;
    }
  }
}

/** Fold a log over a base state. Throws on the first invalid action. */
export function replayLog(base: GraphState, log: readonly EditAction[]): GraphState {
  let state = cloneState(base);
  for (const action of log) state = applyAction(state, action);
  return state;
}

function asTriple(value: unknown): Triple {
  if (
    !Array.isArray(value) ||
    value.length !== 3 ||
    value.some((part) => typeof part !== "string")
  ) {
    throw new EditError(`not a [source, predicate, target] triple: ${JSON.stringify(value)}`);
  }
  return [value[0], value[1], value[2]];
}

function requireString(record: Record<string, unknown>, field: string, at: number): string {
  const value = record[field];
  if (typeof value !== "string") {
    throw new EditError(`action ${at}: field '${field}' must be a string`);
  }
  return value;
}

/** Validate a persisted (untrusted) edit log back into typed actions. */
export function parseEditLog(raw: unknown): EditAction[] {
  if (!Array.isArray(raw)) throw new EditError("edit log must be an array");
  return raw.map((item, i) => {
    if (typeof item !== "object" || item === null) {
      throw new EditError(`action ${i}: not an object`);
    }
    const rec = item as Record<string, unknown>;
    switch (rec.kind) {
      case "add_edge":
      case "remove_edge":
        return {
          kind: rec.kind,
          source: requireString(rec, "source", i),
          predicate: requireString(rec, "predicate", i),
          target: requireString(rec, "target", i),
        };
      case "relabel_node":
        return {
          kind: "relabel_node" as const,
          from: requireString(rec, "from", i),
          to: requireString(rec, "to", i),
        };
      case "remove_node": {
        if (!Array.isArray(rec.removed_edges)) {
          throw new EditError(`action ${i}: remove_node needs a removed_edges array`);
        }
        return {
          kind: "remove_node" as const,
          label: requireString(rec, "label", i),
          removed_edges: rec.removed_edges.map(asTriple),
        };
      }
      case "relabel_edge":
        return {
          kind: "relabel_edge" as const,
          source: requireString(rec, "source", i),
          target: requireString(rec, "target", i),
          predicate: requireString(rec, "predicate", i),
          new_predicate: requireString(rec, "new_predicate", i),
        };
      default:
        throw new EditError(`action ${i}: unknown kind ${JSON.stringify(rec.kind)}`);
    }
  });
}

export class EditableGraphView {
  private readonly base: GraphState;
  private current: GraphState;
  private readonly log: EditAction[] = [];

  constructor(payload: unknown) {
    this.base = fromNodeLink(payload);
    this.current = cloneState(this.base);
  }

  get nodes(): readonly string[] {
    return this.current.nodes;
  }

  get edges(): readonly Triple[] {
    return this.current.edges;
  }

  get dirty(): boolean {
    return this.log.length > 0;
  }

  get isEmpty(): boolean {
    return this.current.nodes.length === 0;
  }

  editLog(): EditAction[] {
    return parseEditLog(JSON.parse(JSON.stringify(this.log)));
  }

  state(): GraphState {
    return cloneState(this.current);
  }

  private apply(action: EditAction): EditAction {
    this.current = applyAction(this.current, action);
    this.log.push(action);
    return action;
  }

  addEdge(rawSource: string, rawPredicate: string, rawTarget: string): EditAction {
    return this.apply({
      kind: "add_edge",
      source: normalizeLabel(rawSource),
      predicate: normalizeLabel(rawPredicate),
      target: normalizeLabel(rawTarget),
    });
  }

  removeEdge([source, predicate, target]: Triple): EditAction {
    return this.apply({ kind: "remove_edge", source, predicate, target });
  }

  /** True when relabeling `from` to `rawTo` would merge two existing nodes. */
  wouldMerge(from: string, rawTo: string): boolean {
    const to = normalizeLabel(rawTo);
    return to !== from && this.current.nodes.includes(to);
  }

  relabelNode(from: string, rawTo: string): { action: EditAction; merged: boolean } {
    const merged = this.wouldMerge(from, rawTo);
    const action = this.apply({
      kind: "relabel_node",
      from,
      to: normalizeLabel(rawTo),
    });
    return { action, merged };
  }

  removeNode(label: string): EditAction {
    const removed_edges = this.current.edges
      .filter(([s, , t]) => s === label || t === label)
      .map((e) => [...e] as Triple);
    return this.apply({ kind: "remove_node", label, removed_edges });
  }

  relabelEdge([source, predicate, target]: Triple, rawNewPredicate: string): EditAction {
    return this.apply({
      kind: "relabel_edge",
      source,
      target,
      predicate,
      new_predicate: normalizeLabel(rawNewPredicate),
    });
  }

  /** Drop the most recent action; returns it, or null when nothing to undo. */
  undo(): EditAction | null {
    const undone = this.log.pop() ?? null;
    if (undone !== null) this.current = replayLog(this.base, this.log);
    return undone;
  }

  /**
   * Re-apply a log persisted by an earlier session. All-or-nothing: a log
   * that no longer fits the loaded graph leaves the view untouched.
   */
  restore(actions: readonly EditAction[]): void {
    if (this.log.length > 0) throw new EditError("cannot restore over existing edits");
    const state = replayLog(this.base, actions);
    this.log.push(...actions);
    this.current = state;
  }

  /**
   * [old, new] label pairs relative to the loaded graph, for the server's
   * merge bookkeeping. Derived by tracking, through the whole log, which
   * loaded nodes each current node absorbed. Nodes created this session have
   * no origin and never produce a pair; a rename chained back to its own
   * original label cancels out.
   */
  relabeledNodes(): [string, string][] {
    const origins = new Map<string, Set<string>>();
    for (const label of this.base.nodes) origins.set(label, new Set([label]));
    for (const action of this.log) {
      switch (action.kind) {
        case "add_edge":
          if (!origins.has(action.source)) origins.set(action.source, new Set());
          if (!origins.has(action.target)) origins.set(action.target, new Set());
          break;
        case "remove_node":
          origins.delete(action.label);
          break;
        case "relabel_node": {
          const moved = origins.get(action.from) ?? new Set<string>();
          origins.delete(action.from);
          const kept = origins.get(action.to);
          if (kept) {
            for (const origin of moved) kept.add(origin);
          } else {
            origins.set(action.to, moved);
          }
          break;
        }
        default:
          break; // edge-only actions never move node identity
      }
    }
    const pairs: [string, string][] = [];
    for (const [label, set] of origins) {
      for (const origin of set) {
        if (origin !== label) pairs.push([origin, label]);
      }
    }
    return pairs.sort(comparePairs);
  }

  /**
   * The change set the server should compute for the current view: relabels
   * applied to the loaded graph as one simultaneous mapping (collapsed edges
   * keep their first occurrence), then an edge set-diff against the view.
   */
  predictedDelta(): GraphDelta {
    const relabeled = this.relabeledNodes();
    const mapping = new Map(relabeled);
    const before = new Map<string, Triple>();
    for (const [s, p, t] of this.base.edges) {
      const triple: Triple = [mapping.get(s) ?? s, p, mapping.get(t) ?? t];
      const key = tripleKey(triple);
      if (!before.has(key)) before.set(key, triple);
    }
    const after = new Map(this.current.edges.map((e) => [tripleKey(e), e]));

    const added: Triple[] = [];
    for (const [key, triple] of after) {
      if (!before.has(key)) added.push([...triple] as Triple);
    }
    const removed: Triple[] = [];
    for (const [key, triple] of before) {
      if (!after.has(key)) removed.push([...triple] as Triple);
    }
    return {
      added_edges: added.sort(compareTriples),
      removed_edges: removed.sort(compareTriples),
      relabeled_nodes: relabeled,
    };
  }

  buildPutPayload(): PutGraphPayload {
    return { ...toNodeLink(this.current), relabeled_nodes: this.relabeledNodes() };
  }
}
