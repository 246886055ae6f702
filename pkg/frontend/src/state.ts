/** Editor state: the last server-acknowledged center set plus local
 * uncommitted edits, category visibility, and view parameters.
 *
 * Invariant: the working set always equals the acknowledged set with the
 * local edit log replayed on top; a failed save never discards edits.
 */

import type {
  ApiClient,
  CenterDto,
  CentersPayload,
  OccPayload,
  PatchDto,
  Vec3,
} from "./api.js";
import { ConflictError } from "./api.js";
import { DEFAULT_DISPLAY, DisplayParams } from "./config.js";

export interface ViewParams {
  yaw: number;
  pitch: number;
  zoom: number;
  panX: number;
  panY: number;
}

export type SaveResult =
  | { ok: true; revision: number }
  | { ok: false; conflict: true; serverRevision: number };

function cloneCenter(c: CenterDto): CenterDto {
  return { id: c.id, class: c.class, pos: [...c.pos] as Vec3, members: c.members };
}

export class EditorStore {
  occ: OccPayload | null = null;
  private acknowledged: CenterDto[] = [];
  private working: CenterDto[] = [];
  revision = 0;
  patches: PatchDto[] = [];
  visibility = new Map<string, boolean>();
  selection: number | null = null;
  view: ViewParams = { yaw: 0.6, pitch: 0.5, zoom: 1, panX: 0, panY: 0 };
  display: DisplayParams = { ...DEFAULT_DISPLAY };

  loadOcc(occ: OccPayload): void {
    this.occ = occ;
    for (const name of occ.classes) {
      if (name !== "empty" && !this.visibility.has(name)) {
        this.visibility.set(name, true);
      }
    }
  }

  loadCenters(payload: CentersPayload): void {
    this.acknowledged = payload.centers.map(cloneCenter);
    this.working = payload.centers.map(cloneCenter);
    this.revision = payload.revision;
  }

  get centers(): readonly CenterDto[] {
    return this.working;
  }

  get dirty(): boolean {
    return (
      JSON.stringify(this.working) !== JSON.stringify(this.acknowledged) ||
      this.patches.length > 0
    );
  }

  /** Uncommitted center ids, for distinct rendering of pending edits. */
  editedIds(): Set<number> {
    const before = new Map(this.acknowledged.map((c) => [c.id, c]));
    const edited = new Set<number>();
    for (const c of this.working) {
      const prev = before.get(c.id);
      if (!prev || JSON.stringify(prev) !== JSON.stringify(c)) {
        edited.add(c.id);
      }
    }
    return edited;
  }

  // --- category visibility -------------------------------------------------

  toggleCategory(name: string): void {
    this.visibility.set(name, !(this.visibility.get(name) ?? true));
  }

  isVisible(name: string): boolean {
    return this.visibility.get(name) ?? true;
  }

  // --- center edits --------------------------------------------------------

  private find(id: number): CenterDto {
    const c = this.working.find((x) => x.id === id);
    if (!c) throw new Error(`no center with id ${id}`);
    return c;
  }

  moveCenter(id: number, delta: Vec3): void {
    const c = this.find(id);
    c.pos = [c.pos[0] + delta[0], c.pos[1] + delta[1], c.pos[2] + delta[2]];
  }

  deleteCenter(id: number): void {
    this.find(id);
    this.working = this.working.filter((c) => c.id !== id);
    if (this.selection === id) this.selection = null;
  }

  /** Delete every center of one category (bulk operation). */
  deleteCategory(name: string): number {
    const before = this.working.length;
    this.working = this.working.filter((c) => c.class !== name);
    return before - this.working.length;
  }

  /** Replace one center with two offset copies for manual separation. */
  splitCenter(id: number, offset: Vec3 = [0.5, 0, 0.5]): [number, number] {
    const original = this.find(id);
    const nextId = Math.max(0, ...this.working.map((c) => c.id)) + 1;
    const halves: [CenterDto, CenterDto] = [
      {
        ...cloneCenter(original),
        id: nextId,
        pos: [
          original.pos[0] - offset[0],
          original.pos[1] - offset[1],
          original.pos[2] - offset[2],
        ],
        members: Math.ceil(original.members / 2),
      },
      {
        ...cloneCenter(original),
        id: nextId + 1,
        pos: [
          original.pos[0] + offset[0],
          original.pos[1] + offset[1],
          original.pos[2] + offset[2],
        ],
        members: Math.floor(original.members / 2) || 1,
      },
    ];
    this.working = this.working.filter((c) => c.id !== id).concat(halves);
    return [nextId, nextId + 1];
  }

  reclassCenter(id: number, name: string): void {
    this.find(id).class = name;
  }

  addPatch(patch: PatchDto): void {
    this.patches.push(patch);
  }

  // --- persistence ---------------------------------------------------------

  /** Commit local edits via compare-and-swap. On conflict the local edits
   * are kept untouched and the caller decides how to merge. */
  async save(api: ApiClient, project: string): Promise<SaveResult> {
    try {
      const result = await api.putCenters(
        project,
        this.revision,
        this.working,
        this.patches,
      );
      this.revision = result.revision;
      this.acknowledged = this.working.map(cloneCenter);
      this.patches = [];
      return { ok: true, revision: result.revision };
    } catch (err) {
      if (err instanceof ConflictError) {
        const server = await api.getCenters(project);
        return { ok: false, conflict: true, serverRevision: server.revision };
      }
      throw err;
    }
  }

  /** Discard local edits and adopt the server state (conflict path). */
  async reload(api: ApiClient, project: string): Promise<void> {
    this.loadCenters(await api.getCenters(project));
    this.patches = [];
  }
}
