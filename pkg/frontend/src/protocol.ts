// Message schema of the panel service WebSocket channel. Commands are
// serialized with fixed key order so the wire form is predictable.

export type Mode = "MOM" | "MRM";

export interface StateMessage {
  type: "state";
  seq: number;
  mode: Mode;
  inputs: number[];
  outputs: number[];
  internals?: Record<string, number>;
  status: string;
  log?: string[];
}

export interface ErrorMessage {
  type: "error";
  detail: string;
}

export type ServerMessage = StateMessage | ErrorMessage;

export const PIN_COUNT = 5;

function checkPin(pin: number): void {
  if (!Number.isInteger(pin) || pin < 1 || pin > PIN_COUNT) {
    throw new RangeError(`pin must be 1..${PIN_COUNT}, got ${pin}`);
  }
}

export function setPinCommand(pin: number, level: 0 | 1): string {
  checkPin(pin);
  return JSON.stringify({ type: "set_pin", pin, level });
}

export function setModeCommand(mode: Mode): string {
  return JSON.stringify({ type: "set_mode", mode });
}

export function runSweepCommand(mode?: Mode): string {
  return mode === undefined
    ? JSON.stringify({ type: "run_sweep" })
    : JSON.stringify({ type: "run_sweep", mode });
}

export function requestSnapshotCommand(): string {
  return JSON.stringify({ type: "request_snapshot" });
}

function isPinArray(value: unknown): value is number[] {
  return (
    Array.isArray(value) &&
    value.length === PIN_COUNT &&
    value.every((b) => b === 0 || b === 1)
  );
}

/** Parse and validate a server message; null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) {
    return null;
  }
  const msg = doc as Record<string, unknown>;
  if (msg.type === "error" && typeof msg.detail === "string") {
    return { type: "error", detail: msg.detail };
  }
  if (
    msg.type === "state" &&
    typeof msg.seq === "number" &&
    (msg.mode === "MOM" || msg.mode === "MRM") &&
    isPinArray(msg.inputs) &&
    isPinArray(msg.outputs) &&
    typeof msg.status === "string"
  ) {
    return {
      type: "state",
      seq: msg.seq,
      mode: msg.mode,
      inputs: msg.inputs,
      outputs: msg.outputs,
      internals: (msg.internals as Record<string, number> | undefined) ?? undefined,
      status: msg.status,
      log: Array.isArray(msg.log) ? (msg.log as string[]) : undefined,
    };
  }
  return null;
}
