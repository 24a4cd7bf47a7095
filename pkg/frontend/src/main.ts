// Application wiring: one EditableGraphView, one ReviewApi, DOM glue.
//
// Flow: load graph -> (optionally restore unsaved edits) -> edit locally
// with every action logged and persisted -> Save PUTs the full graph ->
// Approve re-saves, shows the server's delta for confirmation, then POSTs
// approval. After approval the session is read-only; the server shuts down.

import { ApiError, ReviewApi } from "./apiClient";
import { EditableGraphView, EditError } from "./graphStore";
import { computeLayout } from "./layout";
import { clearEditLog, fingerprintState, loadEditLog, saveEditLog } from "./persist";
import {
  attachPanZoom,
  initialViewBox,
  renderGraph,
  syncEmptyState,
  type PanZoomController,
  type Selection,
} from "./render";
import type { EditAction, GraphDelta, Point, Triple } from "./types";

const WIDTH = 1280;
const HEIGHT = 840;

function byId<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const svg = byId<HTMLElement>("canvas") as unknown as SVGSVGElement;
const emptyState = byId<HTMLDivElement>("empty-state");
const statusEl = byId<HTMLSpanElement>("status");
const banner = byId<HTMLDivElement>("banner");
const bannerText = byId<HTMLSpanElement>("banner-text");
const bannerRetry = byId<HTMLButtonElement>("banner-retry");
const bannerDismiss = byId<HTMLButtonElement>("banner-dismiss");
const undoButton = byId<HTMLButtonElement>("btn-undo");
const saveButton = byId<HTMLButtonElement>("btn-save");
const approveButton = byId<HTMLButtonElement>("btn-approve");
const addSource = byId<HTMLInputElement>("add-source");
const addPredicate = byId<HTMLInputElement>("add-predicate");
const addTarget = byId<HTMLInputElement>("add-target");
const addButton = byId<HTMLButtonElement>("btn-add-edge");
const selectionPanel = byId<HTMLDivElement>("selection-panel");
const logPanel = byId<HTMLDivElement>("log-panel");
const approveDialog = byId<HTMLDialogElement>("approve-dialog");
const deltaSummary = byId<HTMLDivElement>("delta-summary");
const approveCancel = byId<HTMLButtonElement>("btn-approve-cancel");
const approveConfirm = byId<HTMLButtonElement>("btn-approve-confirm");

const api = new ReviewApi();
let view: EditableGraphView | null = null;
let fingerprint = "";
let positions = new Map<string, Point>();
let selection: Selection = null;
let panzoom: PanZoomController | null = null;
let busy = false;
let approved = false;
let retryAction: (() => void) | null = null;

function setStatus(text: string): void {
  statusEl.textContent = text;
}

function hideBanner(): void {
  banner.classList.remove("show", "info");
  retryAction = null;
}

function showBanner(message: string, opts: { retry?: () => void; info?: boolean } = {}): void {
  bannerText.textContent = message;
  retryAction = opts.retry ?? null;
  bannerRetry.hidden = !opts.retry;
  banner.classList.toggle("info", Boolean(opts.info));
  banner.classList.add("show");
}

bannerDismiss.onclick = hideBanner;
bannerRetry.onclick = () => {
  const action = retryAction;
  hideBanner();
  action?.();
};

function describeAction(action: EditAction): string {
  switch (action.kind) {
    case "add_edge":
      return `added edge (${action.source}, ${action.predicate}, ${action.target})`;
    case "remove_edge":
      return `removed edge (${action.source}, ${action.predicate}, ${action.target})`;
    case "relabel_node":
      return `relabeled node '${action.from}' to '${action.to}'`;
    case "remove_node":
      return `removed node '${action.label}' and ${action.removed_edges.length} edge(s)`;
    case "relabel_edge":
      return `relabeled edge '${action.predicate}' to '${action.new_predicate}'`;
  }
}

function summarizeDelta(delta: GraphDelta): string {
  return (
    `${delta.added_edges.length} added, ${delta.removed_edges.length} removed, ` +
    `${delta.relabeled_nodes.length} relabeled`
  );
}

function lockEverything(): void {
  for (const button of [undoButton, saveButton, approveButton, addButton]) {
    button.disabled = true;
  }
  for (const input of [addSource, addPredicate, addTarget]) input.disabled = true;
  selectionPanel.replaceChildren();
}

function syncButtons(): void {
  if (approved) {
    lockEverything();
    return;
  }
  undoButton.disabled = busy || !view?.dirty;
  saveButton.disabled = busy || view === null;
  approveButton.disabled = busy || view === null;
  addButton.disabled = busy || view === null;
}

function selectionStillValid(): boolean {
  if (!view || !selection) return true;
  if (selection.kind === "node") return view.nodes.includes(selection.label);
  const [s, p, t] = selection.triple;
  return view.edges.some(([es, ep, et]) => es === s && ep === p && et === t);
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.onclick = onClick;
  return b;
}

function renderSelectionPanel(): void {
  selectionPanel.replaceChildren();
  if (!view || !selection || approved) return;

  const title = document.createElement("h2");
  const row = document.createElement("div");
  row.className = "row";
  const input = document.createElement("input");

  if (selection.kind === "node") {
    const label = selection.label;
    title.textContent = "Selected node";
    input.value = label;
    row.append(
      button("Rename", () => {
        if (!view) return;
        if (view.wouldMerge(label, input.value)) {
          const merged = input.value.trim();
          const ok = window.confirm(
            `'${merged}' already exists. Merge '${label}' into it? ` +
              "Their edges are combined and duplicates dropped.",
          );
          if (!ok) return;
        }
        runEdit(() => {
          const { action } = view!.relabelNode(label, input.value);
          if (action.kind === "relabel_node") {
            selection = { kind: "node", label: action.to };
          }
        });
      }),
      button("Remove node", () => {
        runEdit(() => {
          view!.removeNode(label);
          selection = null;
        });
      }),
    );
  } else {
    const triple = selection.triple;
    title.textContent = "Selected edge";
    const caption = document.createElement("div");
    caption.textContent = `${triple[0]} → ${triple[2]}`;
    selectionPanel.append(caption);
    input.value = triple[1];
    row.append(
      button("Relabel", () => {
        runEdit(() => {
          const action = view!.relabelEdge(triple, input.value);
          if (action.kind === "relabel_edge") {
            selection = {
              kind: "edge",
              triple: [triple[0], action.new_predicate, triple[2]],
            };
          }
        });
      }),
      button("Remove edge", () => {
        runEdit(() => {
          view!.removeEdge(triple);
          selection = null;
        });
      }),
    );
  }
  selectionPanel.prepend(title);
  selectionPanel.append(input, row);
}

function renderLogPanel(): void {
  logPanel.replaceChildren();
  if (!view) return;
  const log = view.editLog();
  const head = document.createElement("div");
  head.textContent = log.length === 0 ? "No unsaved edits." : `${log.length} edit(s):`;
  logPanel.append(head);
  if (log.length === 0) return;
  const list = document.createElement("ul");
  for (const action of log.slice(-8)) {
    const item = document.createElement("li");
    item.textContent = describeAction(action);
    list.append(item);
  }
  logPanel.append(list);
}

const handlers = {
  onSelectNode(label: string): void {
    selection = { kind: "node", label };
    refresh(false);
  },
  onSelectEdge(triple: Triple): void {
    selection = { kind: "edge", triple };
    refresh(false);
  },
  onClearSelection(): void {
    if (panzoom?.consumeDrag()) return; // finishing a pan is not a deselect
    if (selection === null) return;
    selection = null;
    refresh(false);
  },
};

function refresh(relayout = true): void {
  if (!view) return;
  if (!selectionStillValid()) selection = null;
  if (relayout) {
    positions = computeLayout(view.nodes, view.edges, WIDTH, HEIGHT, positions);
  }
  renderGraph(svg, view.state(), positions, selection, handlers);
  syncEmptyState(emptyState, view.isEmpty);
  renderSelectionPanel();
  renderLogPanel();
  syncButtons();
}

function runEdit(edit: () => void): void {
  if (!view || approved) return;
  hideBanner();
  try {
    edit();
  } catch (err) {
    if (err instanceof EditError) {
      showBanner(err.message);
      return;
    }
    throw err;
  }
  saveEditLog(fingerprint, view.editLog());
  setStatus(view.dirty ? "unsaved edits" : "");
  refresh();
}

undoButton.onclick = () => {
  runEdit(() => {
    const undone = view!.undo();
    setStatus(undone ? `undid: ${describeAction(undone)}` : "nothing to undo");
  });
};

addButton.onclick = () => {
  runEdit(() => {
    view!.addEdge(addSource.value, addPredicate.value, addTarget.value);
    addSource.value = "";
    addPredicate.value = "";
    addTarget.value = "";
  });
};

/** PUT the full edited graph. Resolves to the server delta, or null on failure. */
async function save(): Promise<GraphDelta | null> {
  if (!view || busy || approved) return null;
  busy = true;
  hideBanner();
  setStatus("saving…");
  syncButtons();
  try {
    const delta = await api.putGraph(view.buildPutPayload());
    setStatus(`saved — delta: ${summarizeDelta(delta)}`);
    return delta;
  } catch (err) {
    if (err instanceof ApiError && err.retriable) {
      // nothing is lost: the edit log stays in local storage
      showBanner(`save failed: ${err.message}`, { retry: () => void save() });
    } else if (err instanceof ApiError) {
      showBanner(`server rejected the graph: ${err.message}`);
    } else {
      showBanner(String(err));
    }
    setStatus("save failed");
    return null;
  } finally {
    busy = false;
    syncButtons();
  }
}

saveButton.onclick = () => void save();

function fillDeltaSummary(delta: GraphDelta): void {
  deltaSummary.replaceChildren();
  const head = document.createElement("p");
  head.textContent = `The server computed: ${summarizeDelta(delta)}.`;
  deltaSummary.append(head);
  const list = document.createElement("ul");
  for (const [oldLabel, newLabel] of delta.relabeled_nodes) {
    const item = document.createElement("li");
    item.textContent = `rename '${oldLabel}' → '${newLabel}'`;
    list.append(item);
  }
  for (const [s, p, t] of delta.removed_edges) {
    const item = document.createElement("li");
    item.textContent = `− (${s}, ${p}, ${t})`;
    list.append(item);
  }
  for (const [s, p, t] of delta.added_edges) {
    const item = document.createElement("li");
    item.textContent = `+ (${s}, ${p}, ${t})`;
    list.append(item);
  }
  if (list.childElementCount > 0) deltaSummary.append(list);
}

function finishApproved(message: string): void {
  approved = true;
  clearEditLog(fingerprint);
  setStatus("approved");
  showBanner(message, { info: true });
  lockEverything();
}

async function approveFlow(): Promise<void> {
  if (!view || busy || approved) return;
  // always approve exactly what the server just acknowledged
  const delta = await save();
  if (delta === null) return;
  fillDeltaSummary(delta);

  const confirmed = await new Promise<boolean>((resolve) => {
    if (typeof approveDialog.showModal !== "function") {
      resolve(window.confirm(`Approve this graph? Delta: ${summarizeDelta(delta)}`));
      return;
    }
    approveCancel.onclick = () => {
      approveDialog.close();
      resolve(false);
    };
    approveConfirm.onclick = () => {
      approveDialog.close();
      resolve(true);
    };
    approveDialog.showModal();
  });
  if (!confirmed) return;

  busy = true;
  syncButtons();
  try {
    const response = await api.approve();
    finishApproved(
      `Approved — delta: ${summarizeDelta(response.delta)}. ` +
        "The graph is committed and the review server is shutting down.",
    );
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      finishApproved("This review was already approved.");
    } else if (err instanceof ApiError && err.retriable) {
      showBanner(`approve failed: ${err.message}`, { retry: () => void approveFlow() });
    } else {
      showBanner(`approve failed: ${String(err instanceof ApiError ? err.message : err)}`);
    }
  } finally {
    busy = false;
    syncButtons();
  }
}

approveButton.onclick = () => void approveFlow();

async function boot(): Promise<void> {
  setStatus("loading graph…");
  syncButtons();
  let payload: unknown;
  try {
    payload = await api.fetchGraph();
  } catch (err) {
    const message = err instanceof ApiError ? err.message : String(err);
    showBanner(`cannot load the graph: ${message}`, { retry: () => void boot() });
    setStatus("not connected");
    return;
  }

  try {
    view = new EditableGraphView(payload);
  } catch (err) {
    showBanner(`the server sent an unusable graph: ${String(err)}`);
    return;
  }

  fingerprint = fingerprintState(view.state());
  const stored = loadEditLog(fingerprint);
  if (stored && stored.length > 0) {
    try {
      view.restore(stored);
      setStatus(`restored ${stored.length} unsaved edit(s)`);
    } catch {
      clearEditLog(fingerprint); // log was for a different graph; start clean
      setStatus("");
    }
  } else {
    setStatus("");
  }

  panzoom ??= attachPanZoom(svg, initialViewBox(WIDTH, HEIGHT));
  positions = new Map();
  refresh();
}

void boot();
