"""World maps: block-name lookups over a bounded voxel world.

Loads a Sponge schematic v2 subset (Width/Height/Length, Palette,
varint-packed BlockData) or a human-writable world.json, and answers
coordinate -> block-name queries. Out-of-bounds queries return air, so
the lookup is a total function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nbt
from .grid import Aabb, ClassMap, ClassTable, Coord, EMPTY_ID, SemanticGrid

AIR = "minecraft:air"


class WorldError(Exception):
    pass


class MissingField(WorldError):
    pass


class PaletteIndexOutOfRange(WorldError):
    pass


class VarintOverflow(WorldError):
    pass


@dataclass(frozen=True)
class WorldMap:
    bounds: Aabb
    palette: dict  # block name -> palette index
    blocks: np.ndarray  # (X, Y, Z) palette indices

    def __post_init__(self):
        arr = np.ascontiguousarray(self.blocks, dtype=np.int32)
        if tuple(arr.shape) != self.bounds.dims:
            raise WorldError(f"blocks shape {arr.shape} != bounds dims {self.bounds.dims}")
        if arr.size and int(arr.max()) >= len(self.palette):
            raise PaletteIndexOutOfRange(str(int(arr.max())))
        arr.flags.writeable = False
        object.__setattr__(self, "blocks", arr)
        if self.air_index is None:
            raise WorldError("palette has no air entry")

    @property
    def air_index(self) -> int | None:
        return self.palette.get(AIR)

    @property
    def names_by_index(self) -> list[str]:
        names = [""] * len(self.palette)
        for name, i in self.palette.items():
            names[i] = name
        return names


def query(world: WorldMap, v: Coord) -> str:
    """Block name at v; air outside the world bounds."""
    if not world.bounds.contains(v):
        return AIR
    i = tuple(c - o for c, o in zip(v, world.bounds.min))
    return world.names_by_index[int(world.blocks[i])]


def decode_varints(data: bytes, count: int) -> list[int]:
    """Unsigned LEB128, at most 5 bytes per value."""
    out = []
    pos = 0
    for _ in range(count):
        value = 0
        shift = 0
        while True:
            if pos >= len(data):
                raise MissingField("BlockData shorter than declared volume")
            b = data[pos]
            pos += 1
            value |= (b & 0x7F) << shift
            if not (b & 0x80):
                break
            shift += 7
            if shift > 28:
                raise VarintOverflow("varint longer than 5 bytes")
        out.append(value)
    return out


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varints are unsigned")
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def load_schematic(path) -> WorldMap:
    """Sponge schematic v2 subset; bounds start at the origin.

    BlockData is x-fastest, then z, then y; reindexed into the package's
    fixed (X, Y, Z) layout. Offset/Metadata fields are ignored.
    """
    _, root = nbt.parse_nbt(Path(path).read_bytes())
    if not isinstance(root, nbt.Compound):
        raise MissingField("root is not a compound")
    try:
        width = root["Width"].value
        height = root["Height"].value
        length = root["Length"].value
        palette_tag = root["Palette"]
        block_data = root["BlockData"].value
    except KeyError as e:
        raise MissingField(str(e)) from e
    palette = {name: tag.value for name, tag in palette_tag.items.items()}
    if AIR not in palette:
        palette[AIR] = len(palette)
    n = width * height * length
    flat = decode_varints(block_data, n)
    if max(flat, default=0) >= len(palette):
        raise PaletteIndexOutOfRange(str(max(flat)))
    # Schematic order: index = x + z*Width + y*Width*Length.
    arr = np.asarray(flat, dtype=np.int32).reshape((height, length, width))
    blocks = arr.transpose(2, 0, 1)  # -> (X, Y, Z)
    bounds = Aabb((0, 0, 0), (width - 1, height - 1, length - 1))
    return WorldMap(bounds, palette, blocks)


def load_world_json(path) -> WorldMap:
    """Native JSON world: {"bounds": {...}, "blocks": [[x,y,z,"name"], ...]};
    unlisted voxels are air."""
    data = json.loads(Path(path).read_text())
    try:
        bounds = Aabb.from_json(data["bounds"])
        entries = data["blocks"]
    except KeyError as e:
        raise MissingField(str(e)) from e
    palette = {AIR: 0}
    blocks = np.zeros(bounds.dims, dtype=np.int32)
    for x, y, z, name in entries:
        v = (int(x), int(y), int(z))
        if not bounds.contains(v):
            raise WorldError(f"block {v} outside bounds {bounds}")
        if name not in palette:
            palette[name] = len(palette)
        i = tuple(c - o for c, o in zip(v, bounds.min))
        blocks[i] = palette[name]
    return WorldMap(bounds, palette, blocks)


def load_world(path) -> WorldMap:
    s = str(path)
    if s.endswith(".schem"):
        return load_schematic(path)
    if s.endswith(".json"):
        return load_world_json(path)
    raise WorldError(f"cannot infer world format from {s!r}")


def strip_block_state(name: str) -> str:
    """Drop a trailing [key=value,...] block-state suffix."""
    i = name.find("[")
    return name if i < 0 else name[:i]


def block_class(name: str, cmap: ClassMap) -> int:
    """Resolve a block name to a class id: air is empty; the full name is
    tried before the state-stripped base name."""
    if strip_block_state(name) == AIR:
        return EMPTY_ID
    if name in cmap.mapping:
        return cmap.mapping[name]
    return cmap.resolve(strip_block_state(name))


def extract_occupancy(world: WorldMap, box: Aabb, cmap: ClassMap,
                      table: ClassTable) -> SemanticGrid:
    """Semantic grid over box: each voxel is the remapped class of the block
    there (empty outside the world)."""
    cmap.validate(table)
    lut = np.array([block_class(name, cmap) for name in world.names_by_index],
                   dtype=np.uint16)
    labels = np.zeros(box.dims, dtype=np.uint16)
    lo = tuple(max(a, b) for a, b in zip(box.min, world.bounds.min))
    hi = tuple(min(a, b) for a, b in zip(box.max, world.bounds.max))
    if all(a <= b for a, b in zip(lo, hi)):
        src = tuple(slice(a - o, b - o + 1)
                    for a, b, o in zip(lo, hi, world.bounds.min))
        dst = tuple(slice(a - o, b - o + 1) for a, b, o in zip(lo, hi, box.min))
        labels[dst] = lut[world.blocks[src]]
    return SemanticGrid(box.min, labels, table)
