// DOM wiring: command box, mode/backend toggles, undo, selection panel.

import { ApiClient } from "./api.js";
import { hitTest, type Projection } from "./project.js";
import { renderTopdown } from "./render.js";
import { SessionController } from "./state.js";
import type { Backend, Mode, SceneDoc } from "./types.js";

const qs = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

async function boot(): Promise<void> {
  const baseUrl = (window as any).ROOMEDIT_BASE_URL ?? "";
  const api = new ApiClient(baseUrl);
  const canvas = qs<HTMLCanvasElement>("#view");
  const ctx = canvas.getContext("2d")!;
  const commandBox = qs<HTMLInputElement>("#command");
  const sendButton = qs<HTMLButtonElement>("#send");
  const undoButton = qs<HTMLButtonElement>("#undo");
  const modeSelect = qs<HTMLSelectElement>("#mode");
  const backendSelect = qs<HTMLSelectElement>("#backend");
  const statusLine = qs<HTMLDivElement>("#status");
  const historyLabel = qs<HTMLSpanElement>("#history");
  const inspector = qs<HTMLDivElement>("#inspector");

  const catalog = (await api.getCatalog()) as { categories: string[] };
  let projection: Projection | null = null;

  const controller = new SessionController(api, (state) => {
    if (state.scene) {
      projection = renderTopdown(
        ctx,
        state.scene,
        { width: canvas.width, height: canvas.height, margin: 24 },
        { categories: catalog.categories, selectedId: state.selectedId, diff: state.lastDiff },
      );
    }
    statusLine.textContent = state.error
      ? `error: ${state.error}`
      : state.pending
        ? "working..."
        : state.lastApplied.length
          ? `applied: ${state.lastApplied.join(" | ")}`
          : "ready";
    statusLine.className = state.error ? "error" : "";
    historyLabel.textContent = `history: ${state.historyDepth}`;
    undoButton.disabled = !controller.canUndo();
    sendButton.disabled = !controller.canSubmit();
    const selected = state.scene?.objects.find((o) => o.id === state.selectedId);
    inspector.textContent = selected
      ? `${selected.id}: ${selected.caption}\n` +
        `position (${selected.position.map((v) => v.toFixed(2)).join(", ")}) m\n` +
        `half extents (${selected.half_extents.map((v) => v.toFixed(2)).join(", ")}) m\n` +
        `yaw ${((selected.yaw_radians * 180) / Math.PI).toFixed(1)} deg`
      : "click an object to inspect it";
  });

  const submit = async (): Promise<void> => {
    const text = commandBox.value.trim();
    if (!text) return;
    const ok = await controller.submitCommand(text);
    if (ok) commandBox.value = "";
  };
  sendButton.addEventListener("click", () => void submit());
  commandBox.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void submit();
  });
  undoButton.addEventListener("click", () => void controller.undo());
  modeSelect.addEventListener("change", () => {
    controller.mode = modeSelect.value as Mode;
  });
  backendSelect.addEventListener("change", () => {
    controller.backend = backendSelect.value as Backend;
  });
  canvas.addEventListener("click", (event) => {
    if (!controller.state.scene || !projection) return;
    const rect = canvas.getBoundingClientRect();
    const hit = hitTest(
      controller.state.scene,
      projection,
      event.clientX - rect.left,
      event.clientY - rect.top,
    );
    controller.select(hit ? hit.id : null);
    if (hit && event.shiftKey) {
      commandBox.value = commandBox.value
        ? `${commandBox.value} ${hit.caption}`
        : hit.caption;
    }
  });

  // Start from a demo scene file next to the page, or a tiny built-in room.
  let scene: SceneDoc;
  try {
    const response = await fetch("demo_scene.json");
    if (!response.ok) throw new Error("no demo scene");
    scene = (await response.json()) as SceneDoc;
  } catch {
    scene = {
      room_type: "toy",
      room_bounds: { min: [-2.5, 0, -2.5], max: [2.5, 3, 2.5] },
      objects: [],
    };
  }
  await controller.start(scene);
}

void boot();
