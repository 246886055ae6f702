"""Deterministic multi-view fusion.

Per-view grids are carried into the world frame through their extrinsics
and merged by per-voxel majority vote. This is a geometric stand-in for a
learned fusion stage: deterministic, testable, and declared as such.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Extrinsics, Intrinsics
from .grid import Aabb, Coord, EMPTY_ID, SemanticGrid


class EmptyObservationSet(Exception):
    pass


@dataclass(frozen=True)
class ViewObservation:
    grid: SemanticGrid
    extrinsics: Extrinsics
    intrinsics: Intrinsics | None = None


def transform_view_to_world(obs: ViewObservation) -> list[tuple[Coord, int]]:
    """Map every non-empty voxel center camera->world; a point lands in the
    block that contains it (boundary points go to the higher block)."""
    idx = np.argwhere(obs.grid.labels != EMPTY_ID)
    if idx.size == 0:
        return []
    centers = idx + np.asarray(obs.grid.origin) + 0.5
    world = centers @ obs.extrinsics.rotation.T + obs.extrinsics.translation
    blocks = np.floor(world).astype(np.int64)
    labels = obs.grid.labels[idx[:, 0], idx[:, 1], idx[:, 2]]
    return [(tuple(int(c) for c in b), int(l)) for b, l in zip(blocks, labels)]


def fuse_views(observations: list[ViewObservation], out_bounds: Aabb) -> SemanticGrid:
    """Majority vote per world voxel within out_bounds.

    Ties go to the class supported by the latest observation, then to the
    lowest class id. Voxels with no votes stay empty.
    """
    if not observations:
        raise EmptyObservationSet("need at least one observation")
    table = observations[0].grid.class_table
    votes: dict[Coord, dict[int, list[int]]] = {}
    for obs_i, obs in enumerate(observations):
        for coord, label in transform_view_to_world(obs):
            if not out_bounds.contains(coord):
                continue
            per_class = votes.setdefault(coord, {})
            entry = per_class.setdefault(label, [0, -1])
            entry[0] += 1
            entry[1] = obs_i
    labels = np.zeros(out_bounds.dims, dtype=np.uint16)
    for coord, per_class in votes.items():
        winner = max(per_class.items(),
                     key=lambda kv: (kv[1][0], kv[1][1], -kv[0]))[0]
        i = tuple(c - o for c, o in zip(coord, out_bounds.min))
        labels[i] = winner
    return SemanticGrid(out_bounds.min, labels, table)
