// Panel bootstrap: one WebSocket to the panel service, one render loop.
// Every user action emits exactly one command message; lamps change only
// when a broadcast confirms the new state.

import { createPanel } from "./panel.js";
import {
  Mode,
  parseServerMessage,
  runSweepCommand,
  setModeCommand,
  setPinCommand,
} from "./protocol.js";
import {
  applyServerMessage,
  connectionChanged,
  initialState,
  PanelViewState,
} from "./state.js";

const RECONNECT_DELAY_MS = 1500;

function main(): void {
  const root = document.getElementById("panel");
  if (!root) {
    throw new Error("missing #panel element");
  }

  let view: PanelViewState = initialState();
  let socket: WebSocket | null = null;

  const send = (message: string): void => {
    if (socket && socket.readyState === WebSocket.OPEN) {
      socket.send(message);
    }
  };

  const panel = createPanel(root, {
    onToggle: (pin: number, level: 0 | 1) => send(setPinCommand(pin, level)),
    onMode: (mode: Mode) => send(setModeCommand(mode)),
    onSweep: () => send(runSweepCommand()),
  });

  const render = (next: PanelViewState): void => {
    view = next;
    panel.update(view);
  };

  const connect = (): void => {
    render(connectionChanged(view, "connecting"));
    socket = new WebSocket(`ws://${location.host}/ws`);
    socket.onopen = () => render(connectionChanged(view, "open"));
    socket.onmessage = (event: MessageEvent) => {
      const msg = parseServerMessage(String(event.data));
      if (msg !== null) {
        render(applyServerMessage(view, msg));
      }
    };
    socket.onclose = () => {
      render(connectionChanged(view, "closed"));
      setTimeout(connect, RECONNECT_DELAY_MS);
    };
    socket.onerror = () => socket?.close();
  };

  render(view);
  connect();
}

main();
