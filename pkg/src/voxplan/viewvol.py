"""View-volume computation for label extraction.

Yaw angles snap to the nearest of 8 horizontal directions (4 axis-aligned,
4 diagonal at 45 degrees); yaw 0 faces +Z and yaw increases toward +X.
Axis-aligned views place the player at the center of the volume's back
face; diagonal views place the player at the volume's corner, with the
box opening into the viewed quadrant. Frustum culling keeps voxels whose
centers project inside the closed image rectangle [0,W]x[0,H].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .camera import Extrinsics, Intrinsics
from .grid import EMPTY_ID, Aabb, Coord, SemanticGrid


class ViewKind(enum.Enum):
    AXIS_ALIGNED = "axis_aligned"
    DIAGONAL = "diagonal"


# Snapped horizontal directions, 45 degrees apart starting at +Z.
DIRECTIONS: tuple[Coord, ...] = (
    (0, 0, 1), (1, 0, 1), (1, 0, 0), (1, 0, -1),
    (0, 0, -1), (-1, 0, -1), (-1, 0, 0), (-1, 0, 1),
)


@dataclass(frozen=True)
class ViewCase:
    kind: ViewKind
    direction: Coord

    def __post_init__(self):
        i = DIRECTIONS.index(self.direction)
        expected = ViewKind.AXIS_ALIGNED if i % 2 == 0 else ViewKind.DIAGONAL
        if self.kind is not expected:
            raise ValueError(f"direction {self.direction} is not {self.kind}")


@dataclass(frozen=True)
class VolumeSpec:
    w: int
    h: int
    d: int
    epsilon: Coord = (0, 0, 0)

    def __post_init__(self):
        if min(self.w, self.h, self.d) < 1:
            raise ValueError("volume dimensions must be >= 1")
        object.__setattr__(self, "epsilon", tuple(int(c) for c in self.epsilon))


def classify_view_case(yaw: float) -> ViewCase:
    """Snap yaw to the nearest of the 8 directions.

    Ties exactly halfway between an axis and a diagonal break toward the
    axis-aligned neighbor.
    """
    deg = math.degrees(yaw) % 360.0
    lo = int(deg // 45.0) % 8
    rem = deg - 45.0 * (deg // 45.0)
    if rem < 22.5:
        i = lo
    elif rem > 22.5:
        i = (lo + 1) % 8
    else:
        i = lo if lo % 2 == 0 else (lo + 1) % 8
    kind = ViewKind.AXIS_ALIGNED if i % 2 == 0 else ViewKind.DIAGONAL
    return ViewCase(kind, DIRECTIONS[i])


def compute_view_volume(player: Coord, case: ViewCase, spec: VolumeSpec) -> Aabb:
    """Place the w*h*d volume relative to the (floored) player position."""
    xp, yp, zp = (int(math.floor(c)) for c in player)
    w, h, d = spec.w, spec.h, spec.d
    dx, _, dz = case.direction

    if case.kind is ViewKind.AXIS_ALIGNED:
        # Player at the center of the back face; box extends depth d forward.
        ymin = yp - h // 2
        if dz != 0:
            xmin = xp - w // 2
            zmin, zmax = (zp, zp + d - 1) if dz > 0 else (zp - d + 1, zp)
            return Aabb((xmin, ymin, zmin), (xmin + w - 1, ymin + h - 1, zmax))
        zmin = zp - w // 2
        xmin, xmax = (xp, xp + d - 1) if dx > 0 else (xp - d + 1, xp)
        return Aabb((xmin, ymin, zmin), (xmax, ymin + h - 1, zmin + w - 1))

    # Diagonal: player at the volume's corner, box opens into the quadrant.
    xmin, xmax = (xp, xp + w - 1) if dx > 0 else (xp - w + 1, xp)
    zmin, zmax = (zp, zp + d - 1) if dz > 0 else (zp - d + 1, zp)
    return Aabb((xmin, yp, zmin), (xmax, yp + h - 1, zmax))


def apply_offset(box: Aabb, epsilon) -> Aabb:
    """Rigidly translate the box by the correctional offset epsilon."""
    return box.translate(epsilon)


def default_offset(case: ViewCase, amount: int = 2) -> Coord:
    """Default correction: shift diagonal views along the view direction."""
    if case.kind is ViewKind.AXIS_ALIGNED:
        return (0, 0, 0)
    dx, _, dz = case.direction
    return (dx * amount, 0, dz * amount)


def frustum_cull(grid: SemanticGrid, extrinsics: Extrinsics, intrinsics: Intrinsics) -> SemanticGrid:
    """Empty every voxel whose center projects outside the image or behind
    the camera; same dims and origin."""
    x, y, z = grid.dims
    ix, iy, iz = np.meshgrid(np.arange(x), np.arange(y), np.arange(z), indexing="ij")
    centers = np.stack([ix, iy, iz], axis=-1).reshape(-1, 3) + np.asarray(grid.origin) + 0.5
    cam = (centers - extrinsics.translation) @ extrinsics.rotation
    depth = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intrinsics.fx * cam[:, 0] / depth + intrinsics.cx
        v = intrinsics.fy * cam[:, 1] / depth + intrinsics.cy
    visible = (depth > 0) \
        & (u >= 0) & (u <= intrinsics.width) \
        & (v >= 0) & (v <= intrinsics.height)
    labels = np.where(visible.reshape(x, y, z), grid.labels, EMPTY_ID).astype(np.uint16)
    return grid.with_labels(labels)
