// Panel rendering: three regions mirroring the operator workflow.
//
//   top left   - operational mode selection (MOM / MRM) and session status
//   left       - CHASSIS PINS IN: five channels with ON / OFF controls
//   right      - CHASSIS PINS OUT: five indicator lamps, plus the internal
//                node lamps (only meaningful when the local model runs,
//                i.e. in MOM)
//
// The DOM is built once; update() only mutates lamp classes and control
// state from the supplied view.

import { Mode, PIN_COUNT } from "./protocol.js";
import { PanelViewState } from "./state.js";

export interface PanelHandlers {
  onToggle(pin: number, level: 0 | 1): void;
  onMode(mode: Mode): void;
  onSweep(): void;
}

export interface Panel {
  update(view: PanelViewState): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createPanel(root: HTMLElement, handlers: PanelHandlers): Panel {
  root.innerHTML = "";
  root.classList.add("panel");

  // Mode selection and status.
  const header = el("div", "panel-header");
  const modeBox = el("div", "mode-box");
  modeBox.appendChild(el("span", "region-title", "MODE"));
  const modeButtons = new Map<Mode, HTMLButtonElement>();
  (["MOM", "MRM"] as Mode[]).forEach((mode) => {
    const button = el("button", "mode-button", mode);
    button.dataset.mode = mode;
    button.addEventListener("click", () => handlers.onMode(mode));
    modeButtons.set(mode, button);
    modeBox.appendChild(button);
  });
  const sweepButton = el("button", "sweep-button", "RUN SWEEP");
  sweepButton.addEventListener("click", () => handlers.onSweep());
  modeBox.appendChild(sweepButton);
  const statusBadge = el("span", "status-badge", "connecting");
  header.appendChild(modeBox);
  header.appendChild(statusBadge);
  root.appendChild(header);

  const body = el("div", "panel-body");

  // CHASSIS PINS IN.
  const inputs = el("div", "region region-inputs");
  inputs.appendChild(el("h2", "region-title", "CHASSIS PINS IN"));
  const inputRows: { lamp: HTMLElement; on: HTMLButtonElement; off: HTMLButtonElement }[] = [];
  for (let pin = 1; pin <= PIN_COUNT; pin++) {
    const row = el("div", "pin-row");
    row.appendChild(el("span", "pin-label", `IN ${pin}`));
    const lamp = el("span", "lamp input-lamp");
    lamp.dataset.pin = String(pin);
    const on = el("button", "toggle on", "ON");
    const off = el("button", "toggle off", "OFF");
    on.addEventListener("click", () => handlers.onToggle(pin, 1));
    off.addEventListener("click", () => handlers.onToggle(pin, 0));
    row.appendChild(lamp);
    row.appendChild(on);
    row.appendChild(off);
    inputs.appendChild(row);
    inputRows.push({ lamp, on, off });
  }
  body.appendChild(inputs);

  // CHASSIS PINS OUT plus internal nodes.
  const outputs = el("div", "region region-outputs");
  outputs.appendChild(el("h2", "region-title", "CHASSIS PINS OUT"));
  const outputLamps: HTMLElement[] = [];
  for (let pin = 1; pin <= PIN_COUNT; pin++) {
    const row = el("div", "pin-row");
    row.appendChild(el("span", "pin-label", `OUT ${pin}`));
    const lamp = el("span", "lamp output-lamp");
    lamp.dataset.pin = String(pin);
    row.appendChild(lamp);
    outputs.appendChild(row);
    outputLamps.push(lamp);
  }
  const internalsBox = el("div", "internals");
  internalsBox.appendChild(el("h3", "region-title", "INTERNAL NODES"));
  const internalsGrid = el("div", "internals-grid");
  internalsBox.appendChild(internalsGrid);
  outputs.appendChild(internalsBox);
  body.appendChild(outputs);
  root.appendChild(body);

  const logBox = el("pre", "log-tail");
  root.appendChild(logBox);

  function update(view: PanelViewState): void {
    const connected = view.connection === "open";
    root.classList.toggle("disconnected", !connected);
    statusBadge.textContent = connected ? view.status : view.connection;
    statusBadge.className = `status-badge ${connected ? view.status : "offline"}`;

    modeButtons.forEach((button, mode) => {
      button.disabled = !connected;
      button.classList.toggle("active", view.mode === mode);
    });
    sweepButton.disabled = !connected;

    inputRows.forEach((row, i) => {
      row.lamp.classList.toggle("on", view.inputs[i] === 1);
      row.on.disabled = !connected;
      row.off.disabled = !connected;
    });
    outputLamps.forEach((lamp, i) => {
      lamp.classList.toggle("on", view.outputs[i] === 1);
    });

    // Internal lamps exist only while the local model executes (MOM).
    const internals = view.mode === "MOM" ? view.internals : null;
    internalsBox.classList.toggle("hidden", internals === null);
    if (internals !== null) {
      internalsGrid.innerHTML = "";
      for (const [port, level] of Object.entries(internals)) {
        const cell = el("span", "internal-node");
        const lamp = el("span", "lamp mini");
        lamp.classList.toggle("on", level === 1);
        cell.appendChild(lamp);
        cell.appendChild(el("span", "internal-label", port));
        internalsGrid.appendChild(cell);
      }
    }

    logBox.textContent = view.log.join("\n");
  }

  return { update };
}
