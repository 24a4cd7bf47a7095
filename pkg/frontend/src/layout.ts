// Client-side force-directed placement. Positions live only in memory; they
// are never sent to the server or persisted anywhere.

import {
  forceCenter,
  forceCollide,
  forceLink,
  forceManyBody,
  forceSimulation,
  type SimulationNodeDatum,
} from "d3-force";

import type { Point, Triple } from "./types";

interface LayoutNode extends SimulationNodeDatum {
  id: string;
}

const PADDING = 28;

// fixed-seed LCG so the same graph always lands in the same arrangement
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (1664525 * state + 1013904223) >>> 0;
    return state / 4294967296;
  };
}

/**
 * Place every node inside the padded width x height box.
 *
 * `previous` positions, when given, seed the simulation so an edit nudges
 * the picture instead of reshuffling it; new nodes start from the center.
 */
export function computeLayout(
  nodes: readonly string[],
  edges: readonly Triple[],
  width: number,
  height: number,
  previous?: Map<string, Point>,
): Map<string, Point> {
  const placed = new Map<string, Point>();
  if (nodes.length === 0) return placed;

  const data: LayoutNode[] = nodes.map((id) => {
    const prior = previous?.get(id);
    return prior ? { id, x: prior.x, y: prior.y } : { id };
  });
  const links = edges.map(([source, , target]) => ({ source, target }));

  const simulation = forceSimulation(data)
    .randomSource(lcg(0x5eed))
    .force(
      "link",
      forceLink<LayoutNode, { source: string; target: string }>(links)
        .id((d) => d.id)
        .distance(95)
        .strength(0.5),
    )
    .force("charge", forceManyBody().strength(-240))
    .force("center", forceCenter(width / 2, height / 2))
    .force("collide", forceCollide(36))
    .stop();

  // run to quiescence synchronously; a warm start needs far fewer steps
  const ticks = previous && previous.size > 0 ? 90 : 300;
  for (let i = 0; i < ticks; i++) simulation.tick();

  for (const node of data) {
    placed.set(node.id, {
      x: clamp(node.x ?? width / 2, PADDING, width - PADDING),
      y: clamp(node.y ?? height / 2, PADDING, height - PADDING),
    });
  }
  return placed;
}

function clamp(value: number, lo: number, hi: number): number {
  // degenerate canvases (hi < lo) still deserve a finite answer
  if (hi < lo) return (lo + hi) / 2;
  return Math.min(hi, Math.max(lo, value));
}
