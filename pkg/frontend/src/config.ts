/** Fixed defaults: the 12-category palette (indexed by class id, in class
 * table order) and display parameters. All user-overridable at runtime. */

export const CATEGORY_PALETTE: readonly string[] = [
  "#00000000", // empty: never drawn
  "#d9d9d9", // ceiling
  "#8d6e63", // floor
  "#eceff1", // wall
  "#81d4fa", // window
  "#ff8a65", // chair
  "#e57373", // bed
  "#5c6bc0", // sofa
  "#a1887f", // table
  "#455a64", // tvs
  "#9ccc65", // furniture
  "#ffd54f", // objects
];

export interface DisplayParams {
  /** Edge length of a drawn voxel at zoom 1, in pixels. */
  voxelSize: number;
  /** Voxel fill opacity in [0, 1]. */
  transparency: number;
  /** Radius of a drawn center point at zoom 1, in pixels. */
  centerSize: number;
}

export const DEFAULT_DISPLAY: DisplayParams = {
  voxelSize: 10,
  transparency: 0.85,
  centerSize: 6,
};

/** Grids past this many non-empty voxels are fetched with ?stride=2. */
export const LOD_VOXEL_LIMIT = 200_000;

export const DEFAULT_SERVICE_URL = "http://127.0.0.1:8757";
