"""Retrieval-based shape matching: per-instance occupancy crops, discrete
vertical-axis rotations, and voxel-IoU argmax over a template library.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .centers import Center
from .grid import Coord, EMPTY_ID, SemanticGrid

ROTATIONS = (0, 90, 180, 270)

_FACING_NEXT = {"north": "east", "east": "south", "south": "west", "west": "north"}


class TemplateError(Exception):
    pass


class UnsupportedAngle(TemplateError):
    pass


class EmptyInstance(TemplateError):
    pass


class NoTemplate(TemplateError):
    pass


def _normalize(voxels, blocks):
    """Shift so the occupied set's min corner sits at the origin."""
    vs = sorted(tuple(int(c) for c in v) for v in voxels)
    if not vs:
        raise TemplateError("template has no occupied voxels")
    lo = tuple(min(v[i] for v in vs) for i in range(3))
    shift = lambda v: tuple(c - o for c, o in zip(v, lo))
    return tuple(shift(v) for v in vs), tuple((shift(p), b) for p, b in blocks)


@dataclass(frozen=True)
class Template:
    name: str
    class_id: int
    voxels: tuple[Coord, ...]  # min corner at origin
    blocks: tuple = ()  # ((x, y, z), block-name) stamping recipe

    def __post_init__(self):
        vs, bs = _normalize(self.voxels, self.blocks)
        object.__setattr__(self, "voxels", vs)
        object.__setattr__(self, "blocks", bs)

    @property
    def anchor(self) -> np.ndarray:
        """Centroid of the occupied voxels, in the template's local frame."""
        return np.mean(np.asarray(self.voxels, dtype=float), axis=0)


def _rotate_coord_90(v: Coord) -> Coord:
    # Vertical-axis quarter turn: (x, z) -> (-z, x); north->east->south->west.
    x, y, z = v
    return (-z, y, x)


def _rotate_facing(name: str, quarter_turns: int) -> str:
    i = name.find("[")
    if i < 0:
        return name
    base, state = name[:i], name[i + 1:-1]
    parts = []
    for kv in state.split(","):
        k, _, val = kv.partition("=")
        if k == "facing" and val in _FACING_NEXT:
            for _ in range(quarter_turns):
                val = _FACING_NEXT[val]
        parts.append(f"{k}={val}")
    return f"{base}[{','.join(parts)}]"


def rotate_template(t: Template, delta: int) -> Template:
    """Rotate about the vertical axis by delta degrees, then re-anchor to
    the origin. Orientation-bearing block states rotate with the shape."""
    if delta not in ROTATIONS:
        raise UnsupportedAngle(f"{delta} not in {ROTATIONS}")
    q = delta // 90
    voxels = t.voxels
    blocks = t.blocks
    for _ in range(q):
        voxels = tuple(_rotate_coord_90(v) for v in voxels)
        blocks = tuple((_rotate_coord_90(p), b) for p, b in blocks)
    blocks = tuple((p, _rotate_facing(b, q)) for p, b in blocks)
    return Template(t.name, t.class_id, voxels, blocks)


@dataclass(frozen=True)
class InstanceCrop:
    """Binary occupancy of one object instance, in world coordinates."""

    occupied: frozenset  # of Coord
    centroid: tuple[float, float, float]


def crop_instance(grid: SemanticGrid, center: Center, radius: int = 5) -> InstanceCrop:
    """Cubic crop of side 2r+1 around the rounded centroid, keeping only
    voxels of the center's class. Clamps at the grid border."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    c = tuple(int(math.floor(v + 0.5)) for v in center.centroid)
    lo = tuple(max(a - radius, o) for a, o in zip(c, grid.origin))
    hi = tuple(min(a + radius, o + d - 1)
               for a, o, d in zip(c, grid.origin, grid.dims))
    occupied = set()
    if all(a <= b for a, b in zip(lo, hi)):
        sl = tuple(slice(a - o, b - o + 1) for a, b, o in zip(lo, hi, grid.origin))
        sub = grid.labels[sl]
        for i in np.argwhere(sub == center.class_id):
            occupied.add(tuple(int(v) for v in (i + np.asarray(lo))))
    centroid = (tuple(float(np.mean([v[i] for v in occupied])) for i in range(3))
                if occupied else center.centroid)
    return InstanceCrop(frozenset(occupied), centroid)


def _placement(crop_centroid, anchor) -> Coord:
    """Integer translation putting the template anchor on the instance
    centroid (half-way values round toward +inf)."""
    t = np.asarray(crop_centroid, dtype=float) - np.asarray(anchor, dtype=float)
    return tuple(int(math.floor(v + 0.5)) for v in t)


def voxel_iou(crop: InstanceCrop, template: Template) -> float:
    """IoU of the crop against the template translated anchor-to-centroid."""
    if not crop.occupied:
        raise EmptyInstance("instance crop has no occupied voxels")
    t = _placement(crop.centroid, template.anchor)
    placed = {tuple(c + d for c, d in zip(v, t)) for v in template.voxels}
    inter = len(crop.occupied & placed)
    union = len(crop.occupied | placed)
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    template_index: int
    rotation: int
    iou: float
    placement: Coord


def best_match(crop: InstanceCrop, library, class_id: int,
               rotations=ROTATIONS) -> MatchResult:
    """Exhaustive argmax over the class's templates x rotations.

    Ties break toward the earlier rotation in the given order, then the
    lower template index.
    """
    indices = [i for i, t in enumerate(library) if t.class_id == class_id]
    if not indices:
        raise NoTemplate(f"no template for class {class_id}")
    best = None
    for delta in rotations:
        for j in indices:
            rotated = rotate_template(library[j], delta)
            iou = voxel_iou(crop, rotated)
            if best is None or iou > best.iou:
                best = MatchResult(j, delta, iou,
                                   _placement(crop.centroid, rotated.anchor))
    return best


def load_templates(path) -> list[Template]:
    """templates.json: [{"name", "class", "voxels": [[x,y,z],...],
    "blocks": [[x,y,z,"name"],...]}]; "class" may be a name (resolved by
    the caller) or an integer id."""
    from .grid import CANONICAL_TABLE

    out = []
    for e in json.loads(Path(path).read_text()):
        cls = e["class"]
        class_id = CANONICAL_TABLE.id_of(cls) if isinstance(cls, str) else int(cls)
        voxels = tuple(tuple(int(c) for c in v) for v in e["voxels"])
        blocks = tuple((tuple(int(c) for c in b[:3]), b[3])
                       for b in e.get("blocks", []))
        out.append(Template(e["name"], class_id, voxels, blocks))
    return out


def save_templates(templates, path, table=None) -> None:
    from .grid import CANONICAL_TABLE

    table = table or CANONICAL_TABLE
    data = []
    for t in templates:
        data.append({
            "name": t.name,
            "class": table.names[t.class_id],
            "voxels": [list(v) for v in t.voxels],
            "blocks": [[*p, b] for p, b in t.blocks],
        })
    Path(path).write_text(json.dumps(data, indent=1))
