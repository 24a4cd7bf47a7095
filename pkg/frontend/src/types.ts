// Wire and domain types shared across the review UI.
//
// The server is the source of truth for graph semantics; everything here
// mirrors its JSON shapes exactly. Node identity in the UI is the label
// (labels are unique in a served graph), integer ids exist only on the wire.

/** One node of the node-link payload served by GET /api/graph. */
export interface NodeLinkNode {
  id: number;
  label: string;
}

/** One directed edge of the node-link payload; source/target are node ids. */
export interface NodeLinkEdge {
  source: number;
  target: number;
  label: string;
}

export interface NodeLinkGraph {
  directed: true;
  nodes: NodeLinkNode[];
  edges: NodeLinkEdge[];
}

/** Directed labeled edge keyed by labels: [source, predicate, target]. */
export type Triple = [string, string, string];

/**
 * One entry of the ordered edit log.
 *
 * Every action is replayable: folding the log over the loaded graph must
 * reproduce the current view exactly. `remove_node` therefore records the
 * incident edges it destroyed in the same action record.
 */
export type EditAction =
  | { kind: "add_edge"; source: string; predicate: string; target: string }
  | { kind: "remove_edge"; source: string; predicate: string; target: string }
  | { kind: "relabel_node"; from: string; to: string }
  | { kind: "remove_node"; label: string; removed_edges: Triple[] }
  | {
      kind: "relabel_edge";
      source: string;
      target: string;
      predicate: string;
      new_predicate: string;
    };

/** Server-computed change set, as returned by PUT /api/graph and /api/approve. */
export interface GraphDelta {
  added_edges: Triple[];
  removed_edges: Triple[];
  relabeled_nodes: [string, string][];
}

export interface PutGraphResponse {
  ok: true;
  delta: GraphDelta;
}

export interface ApproveResponse {
  ok: true;
  state: "validated";
  delta: GraphDelta;
}

/** Full PUT body: the edited graph plus explicit relabel bookkeeping. */
export interface PutGraphPayload extends NodeLinkGraph {
  relabeled_nodes: [string, string][];
}

export interface Point {
  x: number;
  y: number;
}
