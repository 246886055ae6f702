"""Dense semantic voxel grids, class tables, class remapping and grid file I/O.

Index order is fixed: idx = x + X*(y + Y*z) (x fastest). Labels are stored
as an (X, Y, Z) uint16 array; ravel(order="F") yields exactly that order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EMPTY_ID = 0

# Canonical 12-class indoor table (empty + 11 object/structure classes).
CANONICAL_CLASS_NAMES = (
    "empty", "ceiling", "floor", "wall", "window", "chair",
    "bed", "sofa", "table", "tvs", "furniture", "objects",
)

VXG_MAGIC = b"VXG1"


class GridError(Exception):
    pass


class FormatError(GridError):
    pass


class DimensionMismatch(GridError):
    pass


class UnknownVersion(GridError):
    pass


class UnknownClass(GridError):
    pass


class TargetIdOutOfRange(GridError):
    pass


Coord = tuple[int, int, int]


@dataclass(frozen=True)
class ClassTable:
    """Ordered class names; index is the class id. Id 0 is always empty/air."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("class table must not be empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        if any(not n for n in self.names):
            raise ValueError("class names must be non-empty")
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownClass(name) from None

    @property
    def empty_id(self) -> int:
        return EMPTY_ID


CANONICAL_TABLE = ClassTable(CANONICAL_CLASS_NAMES)


@dataclass(frozen=True)
class ClassMap:
    """Many-to-one mapping from source class names to target class ids.

    default_target handles unmapped source names; set it to None to make
    unmapped names an error.
    """

    mapping: dict  # source name -> target id
    default_target: int | None

    def validate(self, target: ClassTable) -> None:
        for name, tid in self.mapping.items():
            if not (0 <= tid < len(target)):
                raise TargetIdOutOfRange(f"{name!r} -> {tid}")
        if self.default_target is not None and not (0 <= self.default_target < len(target)):
            raise TargetIdOutOfRange(f"default -> {self.default_target}")

    def resolve(self, source_name: str) -> int:
        if source_name in self.mapping:
            return self.mapping[source_name]
        if self.default_target is not None:
            return self.default_target
        raise UnknownClass(source_name)

    @staticmethod
    def identity(table: ClassTable) -> "ClassMap":
        return ClassMap({n: i for i, n in enumerate(table.names)}, None)

    @staticmethod
    def from_json(path, target: ClassTable) -> "ClassMap":
        data = json.loads(Path(path).read_text())
        default = data.get("default")
        default_id = target.id_of(default) if default is not None else None
        mapping = {src: target.id_of(dst) for src, dst in data.get("map", {}).items()}
        m = ClassMap(mapping, default_id)
        m.validate(target)
        return m


@dataclass(frozen=True)
class Aabb:
    """Inclusive axis-aligned box of integer voxel coordinates."""

    min: Coord
    max: Coord

    def __post_init__(self):
        object.__setattr__(self, "min", tuple(int(c) for c in self.min))
        object.__setattr__(self, "max", tuple(int(c) for c in self.max))
        if any(a > b for a, b in zip(self.min, self.max)):
            raise ValueError(f"degenerate box {self.min}..{self.max}")

    @property
    def dims(self) -> Coord:
        return tuple(b - a + 1 for a, b in zip(self.min, self.max))

    @property
    def volume(self) -> int:
        x, y, z = self.dims
        return x * y * z

    def contains(self, v: Coord) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.min, v, self.max))

    def translate(self, eps) -> "Aabb":
        e = tuple(int(c) for c in eps)
        return Aabb(tuple(a + d for a, d in zip(self.min, e)),
                    tuple(b + d for b, d in zip(self.max, e)))

    def to_json(self):
        return {"min": list(self.min), "max": list(self.max)}

    @staticmethod
    def from_json(data) -> "Aabb":
        return Aabb(tuple(data["min"]), tuple(data["max"]))


@dataclass(frozen=True)
class SemanticGrid:
    """Dense grid of class labels over a world-anchored volume.

    Immutable after construction; build new grids instead of mutating.
    """

    origin: Coord
    labels: np.ndarray  # (X, Y, Z) uint16
    class_table: ClassTable

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(int(c) for c in self.origin))
        arr = np.ascontiguousarray(self.labels, dtype=np.uint16)
        if arr.ndim != 3 or 0 in arr.shape:
            raise ValueError(f"labels must be a non-empty 3D array, got shape {arr.shape}")
        if arr.size and int(arr.max()) >= len(self.class_table):
            raise UnknownClass(f"label {int(arr.max())} out of range for {len(self.class_table)} classes")
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def dims(self) -> Coord:
        return tuple(int(d) for d in self.labels.shape)

    @property
    def bounds(self) -> Aabb:
        return Aabb(self.origin, tuple(o + d - 1 for o, d in zip(self.origin, self.dims)))

    def in_bounds(self, v: Coord) -> bool:
        return self.bounds.contains(v)

    def label_at(self, v: Coord) -> int:
        """Label at world coordinate v; raises IndexError out of bounds."""
        i = tuple(c - o for c, o in zip(v, self.origin))
        if any(not (0 <= a < d) for a, d in zip(i, self.dims)):
            raise IndexError(f"{v} outside {self.bounds}")
        return int(self.labels[i])

    def nonempty_coords(self) -> np.ndarray:
        """(N, 3) array of world coordinates of non-empty voxels."""
        idx = np.argwhere(self.labels != EMPTY_ID)
        return idx + np.asarray(self.origin)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=len(self.class_table))

    def with_labels(self, labels: np.ndarray) -> "SemanticGrid":
        return SemanticGrid(self.origin, labels, self.class_table)

    @staticmethod
    def empty(origin: Coord, dims: Coord, table: ClassTable) -> "SemanticGrid":
        return SemanticGrid(origin, np.zeros(dims, dtype=np.uint16), table)


def remap_classes(grid: SemanticGrid, cmap: ClassMap, target: ClassTable) -> SemanticGrid:
    """Replace every label by its mapped target id; empty always maps to empty."""
    cmap.validate(target)
    lut = np.zeros(len(grid.class_table), dtype=np.uint16)
    for sid, name in enumerate(grid.class_table.names):
        lut[sid] = EMPTY_ID if sid == EMPTY_ID else cmap.resolve(name)
    return SemanticGrid(grid.origin, lut[grid.labels], target)


# ---------------------------------------------------------------------------
# File formats


def save_grid_binary(grid: SemanticGrid, path) -> None:
    x, y, z = grid.dims
    parts = [VXG_MAGIC,
             struct.pack("<III", x, y, z),
             struct.pack("<iii", *grid.origin),
             struct.pack("<H", len(grid.class_table))]
    for name in grid.class_table.names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(grid.labels.ravel(order="F").astype("<u2").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_grid_binary(path) -> SemanticGrid:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:3] != b"VXG":
        raise FormatError("bad magic")
    if data[:4] != VXG_MAGIC:
        raise UnknownVersion(f"unsupported format version {data[3:4]!r}")
    off = 4
    try:
        x, y, z = struct.unpack_from("<III", data, off); off += 12
        origin = struct.unpack_from("<iii", data, off); off += 12
        (nclasses,) = struct.unpack_from("<H", data, off); off += 2
        names = []
        for _ in range(nclasses):
            (ln,) = struct.unpack_from("<H", data, off); off += 2
            names.append(data[off:off + ln].decode("utf-8")); off += ln
    except (struct.error, UnicodeDecodeError) as e:
        raise FormatError(str(e)) from e
    n = x * y * z
    payload = data[off:]
    if len(payload) != 2 * n:
        raise DimensionMismatch(f"declared {n} labels, payload holds {len(payload) // 2}")
    labels = np.frombuffer(payload, dtype="<u2").reshape((x, y, z), order="F")
    return SemanticGrid(origin, labels, ClassTable(tuple(names)))


def save_grid_occ_json(grid: SemanticGrid, path) -> None:
    """Sparse occ.json; voxel coordinates are grid-local indices."""
    idx = np.argwhere(grid.labels != EMPTY_ID)
    voxels = [[int(a), int(b), int(c), int(grid.labels[a, b, c])] for a, b, c in idx]
    data = {
        "dims": list(grid.dims),
        "origin": list(grid.origin),
        "classes": list(grid.class_table.names),
        "voxels": voxels,
    }
    Path(path).write_text(json.dumps(data))


def load_grid_occ_json(path) -> SemanticGrid:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(str(e)) from e
    try:
        dims = tuple(int(d) for d in data["dims"])
        origin = tuple(int(c) for c in data.get("origin", (0, 0, 0)))
        table = ClassTable(tuple(data["classes"]))
        voxels = data.get("voxels", [])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed occ.json: {e}") from e
    labels = np.zeros(dims, dtype=np.uint16)
    for entry in voxels:
        x, y, z, cls = entry
        if not all(0 <= int(c) < d for c, d in zip((x, y, z), dims)):
            raise DimensionMismatch(f"voxel {entry[:3]} outside dims {dims}")
        cid = table.id_of(cls) if isinstance(cls, str) else int(cls)
        if not (0 <= cid < len(table)):
            raise FormatError(f"class index {cid} out of range")
        labels[int(x), int(y), int(z)] = cid
    return SemanticGrid(origin, labels, table)


def save_grid(grid: SemanticGrid, path, format: str | None = None) -> None:
    fmt = format or _infer_format(path)
    if fmt == "vxg":
        save_grid_binary(grid, path)
    elif fmt == "occ":
        save_grid_occ_json(grid, path)
    else:
        raise FormatError(f"unknown grid format {fmt!r}")


def load_grid(path, format: str | None = None) -> SemanticGrid:
    fmt = format or _infer_format(path)
    if fmt == "vxg":
        return load_grid_binary(path)
    if fmt == "occ":
        return load_grid_occ_json(path)
    raise FormatError(f"unknown grid format {fmt!r}")


def _infer_format(path) -> str:
    s = str(path)
    if s.endswith(".vxg"):
        return "vxg"
    if s.endswith(".json"):
        return "occ"
    raise FormatError(f"cannot infer grid format from {s!r}")
