// @vitest-environment happy-dom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { createPanel, PanelHandlers } from "../src/panel.js";
import { applyServerMessage, connectionChanged, initialState } from "../src/state.js";
import { StateMessage } from "../src/protocol.js";

function makeHandlers(): PanelHandlers {
  return { onToggle: vi.fn(), onMode: vi.fn(), onSweep: vi.fn() };
}

function openView(msg: Partial<StateMessage>) {
  const base: StateMessage = {
    type: "state",
    seq: 1,
    mode: "MOM",
    inputs: [0, 0, 0, 0, 0],
    outputs: [0, 0, 0, 0, 0],
    status: "ok",
    ...msg,
  };
  return applyServerMessage(connectionChanged(initialState(), "open"), base);
}

describe("panel rendering", () => {
  let root: HTMLElement;
  let handlers: PanelHandlers;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.innerHTML = "";
    document.body.appendChild(root);
    handlers = makeHandlers();
  });

  it("lights the first three output lamps for [1,1,1,0,0]", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({ outputs: [1, 1, 1, 0, 0] }));
    const lamps = [...root.querySelectorAll(".output-lamp")];
    expect(lamps.map((lamp) => lamp.classList.contains("on"))).toEqual([
      true,
      true,
      true,
      false,
      false,
    ]);
  });

  it("shows internal lamps only in MOM", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({ internals: { "n1.out1": 1, "s1.in1": 0 } }));
    const box = root.querySelector(".internals")!;
    expect(box.classList.contains("hidden")).toBe(false);
    expect(root.querySelectorAll(".internal-node").length).toBe(2);

    panel.update(openView({ seq: 2, mode: "MRM" }));
    expect(box.classList.contains("hidden")).toBe(true);
  });

  it("clicking ON for pin 2 emits exactly one toggle action", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({}));
    const row = root.querySelectorAll(".region-inputs .pin-row")[1]!;
    (row.querySelector("button.on") as HTMLButtonElement).click();
    expect(handlers.onToggle).toHaveBeenCalledTimes(1);
    expect(handlers.onToggle).toHaveBeenCalledWith(2, 1);
    (row.querySelector("button.off") as HTMLButtonElement).click();
    expect(handlers.onToggle).toHaveBeenCalledWith(2, 0);
  });

  it("mode buttons reflect and change the mode", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({}));
    const momButton = root.querySelector('button[data-mode="MOM"]')!;
    const mrmButton = root.querySelector('button[data-mode="MRM"]')!;
    expect(momButton.classList.contains("active")).toBe(true);
    (mrmButton as HTMLButtonElement).click();
    expect(handlers.onMode).toHaveBeenCalledWith("MRM");
  });

  it("disables controls and grays the panel when disconnected", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({}));
    let buttons = [...root.querySelectorAll("button")] as HTMLButtonElement[];
    expect(buttons.every((b) => !b.disabled)).toBe(true);

    panel.update(connectionChanged(openView({}), "closed"));
    buttons = [...root.querySelectorAll("button")] as HTMLButtonElement[];
    expect(buttons.every((b) => b.disabled)).toBe(true);
    expect(root.classList.contains("disconnected")).toBe(true);
  });

  it("input lamps follow broadcast input attributes", () => {
    const panel = createPanel(root, handlers);
    panel.update(openView({ inputs: [0, 1, 0, 0, 1] }));
    const lamps = [...root.querySelectorAll(".input-lamp")];
    expect(lamps.map((lamp) => lamp.classList.contains("on"))).toEqual([
      false,
      true,
      false,
      false,
      true,
    ]);
  });
});
