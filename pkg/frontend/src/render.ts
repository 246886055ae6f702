/** Scene assembly: a pure function from editor state to an ordered list
 * of draw operations. The canvas adapter below is the only impure part,
 * so tests assert on the operation list directly. */

import type { Vec3 } from "./api.js";
import { CATEGORY_PALETTE } from "./config.js";
import { project, Projected, sceneTarget, Viewport } from "./projection.js";
import type { EditorStore } from "./state.js";

export interface VoxelOp {
  kind: "voxel";
  x: number;
  y: number;
  depth: number;
  size: number;
  color: string;
  alpha: number;
  classId: number;
}

export interface CenterOp {
  kind: "center";
  x: number;
  y: number;
  depth: number;
  radius: number;
  color: string;
  id: number;
  className: string;
  selected: boolean;
  edited: boolean;
}

export type DrawOp = VoxelOp | CenterOp;

export function buildScene(store: EditorStore, viewport: Viewport): DrawOp[] {
  const occ = store.occ;
  if (!occ) return [];
  const target = sceneTarget(occ.voxels, occ.origin);
  const ops: DrawOp[] = [];
  const edited = store.editedIds();

  for (const [vx, vy, vz, classId] of occ.voxels) {
    const name = occ.classes[classId];
    if (name === undefined || !store.isVisible(name)) continue;
    const world: Vec3 = [
      occ.origin[0] + vx + 0.5,
      occ.origin[1] + vy + 0.5,
      occ.origin[2] + vz + 0.5,
    ];
    const p = project(world, target, store.view, viewport);
    ops.push({
      kind: "voxel",
      x: p.x,
      y: p.y,
      depth: p.depth,
      size: store.display.voxelSize * store.view.zoom * occ.stride,
      color: CATEGORY_PALETTE[classId] ?? "#888888",
      alpha: store.display.transparency,
      classId,
    });
  }

  for (const c of store.centers) {
    if (!store.isVisible(c.class)) continue;
    const classId = occ.classes.indexOf(c.class);
    const p = project(
      [c.pos[0] + 0.5, c.pos[1] + 0.5, c.pos[2] + 0.5],
      target,
      store.view,
      viewport,
    );
    ops.push({
      kind: "center",
      x: p.x,
      y: p.y,
      depth: p.depth,
      radius: store.display.centerSize * store.view.zoom,
      color: CATEGORY_PALETTE[classId] ?? "#888888",
      id: c.id,
      className: c.class,
      selected: store.selection === c.id,
      edited: edited.has(c.id),
    });
  }

  // Painter's algorithm: far to near; centers win ties so they stay
  // clickable on top of their own voxels.
  ops.sort(
    (a, b) => b.depth - a.depth || (a.kind === "voxel" ? -1 : 1),
  );
  return ops;
}

/** Projected center points in store order, for hit testing. */
export function projectCenters(
  store: EditorStore,
  viewport: Viewport,
): Projected[] {
  const occ = store.occ;
  if (!occ) return [];
  const target = sceneTarget(occ.voxels, occ.origin);
  return store.centers.map((c) =>
    project(
      [c.pos[0] + 0.5, c.pos[1] + 0.5, c.pos[2] + 0.5],
      target,
      store.view,
      viewport,
    ),
  );
}

export function drawToCanvas(
  ctx: CanvasRenderingContext2D,
  ops: readonly DrawOp[],
  viewport: Viewport,
): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  for (const op of ops) {
    if (op.kind === "voxel") {
      ctx.globalAlpha = op.alpha;
      ctx.fillStyle = op.color;
      ctx.fillRect(op.x - op.size / 2, op.y - op.size / 2, op.size, op.size);
    } else {
      ctx.globalAlpha = 1;
      ctx.fillStyle = op.color;
      ctx.beginPath();
      ctx.arc(op.x, op.y, op.radius, 0, 2 * Math.PI);
      ctx.fill();
      ctx.lineWidth = op.selected ? 3 : 1.5;
      ctx.strokeStyle = op.edited ? "#ff1744" : "#212121";
      ctx.stroke();
    }
  }
  ctx.globalAlpha = 1;
}
