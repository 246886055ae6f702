"""Object-center extraction: binarization, uniform-kernel density,
thresholding, and per-class DBSCAN down to instance centroids.

The k^3 kernel is normalized to a mean, so the threshold tau lives in
[0, 1] regardless of k. Window sums are integer-exact (zero padding at
the borders).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .grid import ClassTable, Coord, EMPTY_ID, SemanticGrid


class InvalidKernel(Exception):
    pass


@dataclass(frozen=True)
class DensityField:
    values: np.ndarray  # same dims as the source grid, floats in [0, 1]
    kernel_size: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class Center:
    id: int
    class_id: int
    centroid: tuple[float, float, float]
    members: int
    member_voxels: tuple[Coord, ...] = ()


@dataclass(frozen=True)
class CenterSet:
    centers: tuple[Center, ...]
    params: dict = field(default_factory=dict)
    noise_count: int = 0


def binarize(grid: SemanticGrid) -> np.ndarray:
    """1 where the label is any non-empty class, else 0."""
    return (grid.labels != EMPTY_ID).astype(np.uint8)


def density_map(binary: np.ndarray, k: int) -> DensityField:
    """Mean occupancy over the k^3 window centered at each voxel."""
    if k < 1 or k % 2 == 0:
        raise InvalidKernel(f"kernel size must be odd and positive, got {k}")
    counts = ndimage.convolve(binary.astype(np.int64),
                              np.ones((k, k, k), dtype=np.int64),
                              mode="constant", cval=0)
    return DensityField(counts / k ** 3, k)


def extract_candidates(grid: SemanticGrid, density: DensityField,
                       tau: float) -> list[tuple[int, Coord]]:
    """(class id, world coord) for every non-empty voxel with D >= tau.

    Empty voxels are never candidates, whatever their density."""
    mask = (grid.labels != EMPTY_ID) & (density.values >= tau)
    idx = np.argwhere(mask)
    origin = np.asarray(grid.origin)
    return [(int(grid.labels[tuple(i)]), tuple(int(c) for c in i + origin))
            for i in idx]


def dbscan(points, eta: float, min_pts: int):
    """Standard DBSCAN with the L2 metric (distance <= eta, inclusive).

    Returns (clusters, noise) as lists of point indices. With min_pts=1
    every point is core and the result is eta-connected components.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return [], []
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    neighbors = d2 <= eta * eta  # includes self
    core = neighbors.sum(axis=1) >= min_pts

    UNVISITED, NOISE = -2, -1
    labels = np.full(n, UNVISITED, dtype=int)
    clusters = []
    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        cluster = len(clusters)
        labels[i] = cluster
        members = [i]
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in np.flatnonzero(neighbors[j]):
                if labels[k] == UNVISITED or labels[k] == NOISE:
                    if labels[k] == UNVISITED and core[k]:
                        frontier.append(k)
                    labels[k] = cluster
                    members.append(int(k))
        clusters.append(sorted(members))
    noise = [i for i in range(n) if labels[i] == NOISE]
    return clusters, noise


def cluster_centroids(candidates, eta: float, min_pts: int = 1,
                      params: dict | None = None) -> CenterSet:
    """Run DBSCAN independently per class; one center per cluster at the
    arithmetic mean of its member voxels. Noise points are dropped and
    counted."""
    by_class: dict[int, list[Coord]] = {}
    for class_id, coord in candidates:
        by_class.setdefault(class_id, []).append(tuple(coord))
    centers = []
    noise_total = 0
    next_id = 0
    for class_id in sorted(by_class):
        pts = by_class[class_id]
        clusters, noise = dbscan(pts, eta, min_pts)
        noise_total += len(noise)
        for members in clusters:
            coords = [pts[i] for i in members]
            centroid = tuple(float(c) for c in np.mean(coords, axis=0))
            centers.append(Center(next_id, class_id, centroid, len(coords),
                                  tuple(coords)))
            next_id += 1
    return CenterSet(tuple(centers), params or {"eta": eta, "min_pts": min_pts},
                     noise_total)


def save_centers(cs: CenterSet, table: ClassTable, path) -> None:
    data = [{"id": c.id, "class": table.names[c.class_id],
             "pos": [float(v) for v in c.centroid], "members": c.members}
            for c in cs.centers]
    Path(path).write_text(json.dumps(data, indent=1))


def load_centers(path, table: ClassTable) -> CenterSet:
    data = json.loads(Path(path).read_text())
    centers = tuple(Center(int(e["id"]), table.id_of(e["class"]),
                           tuple(float(v) for v in e["pos"]),
                           int(e.get("members", 1)))
                    for e in data)
    return CenterSet(centers)
