/** Browser entry point: wires the store, API client, and canvas together.
 *
 * Interaction scheme: drag rotates, wheel zooms, shift-drag pans,
 * dragging a center in edit mode moves it, right-click deletes, the
 * toolbar exposes split / save / plan / apply. Unsaved edits prompt
 * before navigation and are never discarded by a failed save.
 */

import { ApiClient, DispatchStatus } from "./api.js";
import { DEFAULT_SERVICE_URL, LOD_VOXEL_LIMIT } from "./config.js";
import { dragDeltaToWorld, pick, Viewport } from "./projection.js";
import { buildScene, drawToCanvas, projectCenters } from "./render.js";
import { EditorStore } from "./state.js";

interface DragState {
  kind: "orbit" | "pan" | "center";
  lastX: number;
  lastY: number;
  centerId?: number;
}

export async function startEditor(
  root: HTMLElement,
  serviceUrl: string = DEFAULT_SERVICE_URL,
): Promise<void> {
  const api = new ApiClient(serviceUrl);
  const store = new EditorStore();

  const { projects } = await api.listProjects();
  const project = projects[0];
  if (!project) {
    root.textContent = "No projects available from the service.";
    return;
  }

  let occ = await api.getOcc(project);
  if (occ.voxels.length > LOD_VOXEL_LIMIT) {
    occ = await api.getOcc(project, 2);
  }
  store.loadOcc(occ);
  store.loadCenters(await api.getCenters(project));

  const canvas = document.createElement("canvas");
  canvas.width = 960;
  canvas.height = 640;
  const viewport: Viewport = { width: canvas.width, height: canvas.height };
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2D canvas unavailable");

  const toolbar = document.createElement("div");
  const legend = document.createElement("div");
  const status = document.createElement("div");
  root.append(toolbar, legend, canvas, status);

  const render = () => drawToCanvas(ctx, buildScene(store, viewport), viewport);

  // Per-category toggles, color-coded in class-table order.
  for (const name of occ.classes) {
    if (name === "empty") continue;
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => {
      store.toggleCategory(name);
      render();
    });
    label.append(box, document.createTextNode(name));
    legend.append(label);
  }

  const slider = (
    label: string,
    min: number,
    max: number,
    value: number,
    apply: (v: number) => void,
  ) => {
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = "0.05";
    input.value = String(value);
    input.title = label;
    input.addEventListener("input", () => {
      apply(Number(input.value));
      render();
    });
    toolbar.append(input);
  };
  slider("voxel size", 2, 24, store.display.voxelSize, (v) => {
    store.display.voxelSize = v;
  });
  slider("transparency", 0.05, 1, store.display.transparency, (v) => {
    store.display.transparency = v;
  });
  slider("center size", 2, 16, store.display.centerSize, (v) => {
    store.display.centerSize = v;
  });

  const button = (label: string, onClick: () => void) => {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", onClick);
    toolbar.append(b);
    return b;
  };

  const saveButton = button("Save", async () => {
    const result = await store.save(api, project);
    if (result.ok) {
      status.textContent = `Saved at revision ${result.revision}.`;
    } else {
      const discard = window.confirm(
        `The server holds revision ${result.serverRevision}; your edits ` +
          "are based on an older one. Reload server state and drop local " +
          "edits? (Cancel keeps your edits for manual retry.)",
      );
      if (discard) {
        await store.reload(api, project);
        status.textContent = "Reloaded server centers.";
      } else {
        status.textContent = "Conflict: local edits kept, not saved.";
      }
    }
    render();
  });

  button("Split", () => {
    if (store.selection !== null) {
      store.splitCenter(store.selection);
      render();
    }
  });

  button("Generate Plan", async () => {
    const summary = await api.generatePlan(project);
    status.textContent =
      `Plan: ${summary.command_count} commands, ` +
      `${summary.conflicts} conflicts, ${summary.fallbacks} fallbacks.`;
  });

  const pollStatus = async () => {
    let st: DispatchStatus;
    do {
      await new Promise((r) => setTimeout(r, 500));
      st = await api.getStatus(project);
      status.textContent = `Dispatch ${st.state}: ${st.sent}/${st.total} sent, ${st.failed} failed.`;
    } while (st.state === "running");
  };

  button("Apply (dry-run)", async () => {
    const result = await api.apply(project, { dryRun: true });
    status.textContent = `Dry run: ${result.commands?.length ?? 0} commands.`;
  });

  button("Apply (live)", async () => {
    await api.apply(project, { dryRun: false });
    await pollStatus();
  });

  // Service reachability gates the commit actions.
  const probe = async () => {
    try {
      await api.listProjects();
      saveButton.disabled = false;
    } catch {
      saveButton.disabled = true;
    }
  };
  setInterval(probe, 5000);

  let drag: DragState | null = null;

  canvas.addEventListener("mousedown", (e) => {
    const rect = canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const hit = pick(
      projectCenters(store, viewport),
      px,
      py,
      store.display.centerSize * store.view.zoom + 4,
    );
    if (e.button === 2 && hit >= 0) {
      const victim = store.centers[hit];
      if (victim) store.deleteCenter(victim.id);
      render();
      return;
    }
    if (hit >= 0) {
      const center = store.centers[hit];
      if (center) {
        store.selection = center.id;
        drag = { kind: "center", lastX: px, lastY: py, centerId: center.id };
        render();
        return;
      }
    }
    drag = { kind: e.shiftKey ? "pan" : "orbit", lastX: px, lastY: py };
  });

  canvas.addEventListener("contextmenu", (e) => e.preventDefault());

  canvas.addEventListener("mousemove", (e) => {
    if (!drag) return;
    const rect = canvas.getBoundingClientRect();
    const px = e.clientX - rect.left;
    const py = e.clientY - rect.top;
    const dx = px - drag.lastX;
    const dy = py - drag.lastY;
    drag.lastX = px;
    drag.lastY = py;
    if (drag.kind === "orbit") {
      store.view.yaw += dx * 0.01;
      store.view.pitch = Math.min(
        1.5,
        Math.max(-1.5, store.view.pitch + dy * 0.01),
      );
    } else if (drag.kind === "pan") {
      store.view.panX += dx;
      store.view.panY += dy;
    } else if (drag.centerId !== undefined) {
      store.moveCenter(drag.centerId, dragDeltaToWorld(dx, dy, store.view));
    }
    render();
  });

  window.addEventListener("mouseup", () => {
    drag = null;
  });

  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    store.view.zoom = Math.min(
      20,
      Math.max(0.1, store.view.zoom * Math.exp(-e.deltaY * 0.001)),
    );
    render();
  });

  window.addEventListener("beforeunload", (e) => {
    if (store.dirty) e.preventDefault();
  });

  render();
}

declare global {
  interface Window {
    voxplanStartEditor?: typeof startEditor;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.voxplanStartEditor = startEditor;
  const mount = document.getElementById("editor");
  if (mount) {
    void startEditor(mount);
  }
}
