// Client-side view state. Lamps are never predicted locally: the only way
// state changes is a received broadcast, and stale broadcasts (sequence
// numbers at or below the last applied one) are discarded.

import { Mode, PIN_COUNT, ServerMessage } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface PanelViewState {
  connection: Connection;
  seq: number;
  mode: Mode;
  inputs: number[];
  outputs: number[];
  internals: Record<string, number> | null;
  status: string;
  log: string[];
}

export function initialState(): PanelViewState {
  return {
    connection: "connecting",
    seq: 0,
    mode: "MOM",
    inputs: new Array(PIN_COUNT).fill(0),
    outputs: new Array(PIN_COUNT).fill(0),
    internals: null,
    status: "disconnected",
    log: [],
  };
}

export function applyServerMessage(
  view: PanelViewState,
  msg: ServerMessage,
): PanelViewState {
  if (msg.type === "error") {
    return { ...view, log: [...view.log, `error: ${msg.detail}`].slice(-10) };
  }
  if (msg.seq <= view.seq) {
    return view; // stale broadcast
  }
  return {
    ...view,
    seq: msg.seq,
    mode: msg.mode,
    inputs: [...msg.inputs],
    outputs: [...msg.outputs],
    internals: msg.internals ? { ...msg.internals } : null,
    status: msg.status,
    log: msg.log ? [...msg.log] : view.log,
  };
}

export function connectionChanged(
  view: PanelViewState,
  connection: Connection,
): PanelViewState {
  const status = connection === "open" ? view.status : "disconnected";
  return { ...view, connection, status };
}
