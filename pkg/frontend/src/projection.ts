/** Orbit-camera projection: world voxel coordinates to screen pixels.
 *
 * Orthographic on purpose: the editor cares about legibility and exact
 * drag inverses, not perspective realism. The camera orbits the scene
 * target with yaw (around world +Y) and pitch (toward the ground plane);
 * dragging a center moves it in the camera's right/up plane, which makes
 * screen-space drag deltas invert exactly.
 */

import type { Vec3 } from "./api.js";
import type { ViewParams } from "./state.js";

export interface Viewport {
  width: number;
  height: number;
}

export interface CameraBasis {
  right: Vec3;
  up: Vec3;
  forward: Vec3;
}

export function cameraBasis(view: ViewParams): CameraBasis {
  const cy = Math.cos(view.yaw);
  const sy = Math.sin(view.yaw);
  const cp = Math.cos(view.pitch);
  const sp = Math.sin(view.pitch);
  // Forward points from the camera toward the target.
  const forward: Vec3 = [sy * cp, -sp, cy * cp];
  const right: Vec3 = [cy, 0, -sy];
  const up: Vec3 = cross(forward, right);
  return { right, up, forward };
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export interface Projected {
  x: number;
  y: number;
  /** Distance along the view direction; larger is farther. */
  depth: number;
}

export function project(
  point: Vec3,
  target: Vec3,
  view: ViewParams,
  viewport: Viewport,
): Projected {
  const basis = cameraBasis(view);
  const rel: Vec3 = [
    point[0] - target[0],
    point[1] - target[1],
    point[2] - target[2],
  ];
  return {
    x: viewport.width / 2 + view.panX + dot(basis.right, rel) * view.zoom,
    y: viewport.height / 2 + view.panY - dot(basis.up, rel) * view.zoom,
    depth: dot(basis.forward, rel),
  };
}

/** World-space displacement whose projection is exactly (dx, dy) pixels:
 * the inverse of `project` restricted to the camera plane. */
export function dragDeltaToWorld(
  dx: number,
  dy: number,
  view: ViewParams,
): Vec3 {
  const { right, up } = cameraBasis(view);
  const s = 1 / view.zoom;
  return [
    (right[0] * dx - up[0] * dy) * s,
    (right[1] * dx - up[1] * dy) * s,
    (right[2] * dx - up[2] * dy) * s,
  ];
}

/** Center of mass of the non-empty voxel cloud: the orbit target. */
export function sceneTarget(
  voxels: readonly [number, number, number, number][],
  origin: Vec3,
): Vec3 {
  if (voxels.length === 0) return [...origin] as Vec3;
  let sx = 0;
  let sy = 0;
  let sz = 0;
  for (const [x, y, z] of voxels) {
    sx += x;
    sy += y;
    sz += z;
  }
  const n = voxels.length;
  return [
    origin[0] + sx / n + 0.5,
    origin[1] + sy / n + 0.5,
    origin[2] + sz / n + 0.5,
  ];
}

/** Hit test: index of the nearest projected point within `radius` pixels
 * of (px, py), preferring the closest in depth; -1 if none. */
export function pick(
  points: readonly Projected[],
  px: number,
  py: number,
  radius: number,
): number {
  let best = -1;
  let bestKey = Infinity;
  for (let i = 0; i < points.length; i++) {
    const p = points[i]!;
    const d2 = (p.x - px) ** 2 + (p.y - py) ** 2;
    if (d2 <= radius * radius) {
      const key = d2 + p.depth * 1e-6;
      if (key < bestKey) {
        bestKey = key;
        best = i;
      }
    }
  }
  return best;
}
