// Local persistence of the edit log, so a browser refresh before approval
// loses nothing. Only the log is stored: positions and view state are
// deliberately ephemeral, and the graph itself always comes from the server.

import { parseEditLog, type GraphState } from "./graphStore";
import type { EditAction } from "./types";

const KEY_PREFIX = "truster-review-edits:";

/**
 * Content fingerprint of the loaded graph. The stored log is only replayed
 * onto the exact graph it was recorded against; a rebuilt or different
 * workspace gets a different key and starts clean.
 */
export function fingerprintState(state: GraphState): string {
  const canonical = JSON.stringify([
    [...state.nodes].sort(),
    state.edges.map((e) => e.join("")).sort(),
  ]);
  // FNV-1a 32-bit; collisions only risk offering a stale log, which replay
  // validation rejects anyway
  let hash = 0x811c9dc5;
  for (let i = 0; i < canonical.length; i++) {
    hash ^= canonical.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, "0");
}

function storageOrNull(): Storage | null {
  try {
    if (typeof localStorage === "undefined") return null;
    return localStorage;
  } catch {
    return null; // storage disabled; editing still works, just not refresh-safe
  }
}

export function saveEditLog(fingerprint: string, log: readonly EditAction[]): void {
  const store = storageOrNull();
  if (!store) return;
  if (log.length === 0) {
    store.removeItem(KEY_PREFIX + fingerprint);
    return;
  }
  store.setItem(KEY_PREFIX + fingerprint, JSON.stringify(log));
}

export function loadEditLog(fingerprint: string): EditAction[] | null {
  const store = storageOrNull();
  if (!store) return null;
  const raw = store.getItem(KEY_PREFIX + fingerprint);
  if (raw === null) return null;
  try {
    return parseEditLog(JSON.parse(raw));
  } catch {
    store.removeItem(KEY_PREFIX + fingerprint);
    return null;
  }
}

export function clearEditLog(fingerprint: string): void {
  storageOrNull()?.removeItem(KEY_PREFIX + fingerprint);
}
