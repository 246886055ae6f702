import gzip
import json
import struct

import numpy as np
import pytest

from voxplan import nbt
from voxplan.grid import CANONICAL_TABLE, Aabb, ClassMap
from voxplan.worldmap import (
    AIR, MissingField, PaletteIndexOutOfRange, VarintOverflow, WorldMap,
    block_class, decode_varints, encode_varint, extract_occupancy,
    load_schematic, load_world_json, query, strip_block_state,
)


def schem_bytes(width, height, length, palette, flat_indices):
    """Hand-build a Sponge v2 schematic with an independent varint encoder."""
    def varint(v):
        out = b""
        while True:
            b = v & 0x7F
            v >>= 7
            if v:
                out += bytes([b | 0x80])
            else:
                return out + bytes([b])

    block_data = b"".join(varint(i) for i in flat_indices)
    root = nbt.Compound({
        "Width": nbt.Short(width),
        "Height": nbt.Short(height),
        "Length": nbt.Short(length),
        "Palette": nbt.Compound({k: nbt.Int(v) for k, v in palette.items()}),
        "BlockData": nbt.ByteArray(block_data),
    })
    return gzip.compress(nbt.encode_nbt("Schematic", root))


def test_schematic_one_air_voxel(tmp_path):
    p = tmp_path / "a.schem"
    p.write_bytes(schem_bytes(1, 1, 1, {AIR: 0}, [0]))
    world = load_schematic(p)
    assert world.bounds == Aabb((0, 0, 0), (0, 0, 0))
    assert query(world, (0, 0, 0)) == AIR


def test_schematic_stone_air(tmp_path):
    p = tmp_path / "b.schem"
    p.write_bytes(schem_bytes(2, 1, 1, {AIR: 0, "minecraft:stone": 1}, [1, 0]))
    world = load_schematic(p)
    assert query(world, (0, 0, 0)) == "minecraft:stone"
    assert query(world, (1, 0, 0)) == AIR


def test_schematic_index_order(tmp_path):
    # schematic order is x + z*W + y*W*L
    w, h, l = 2, 2, 2
    flat = list(range(8))
    palette = {AIR: 0}
    palette.update({f"b{i}": i for i in range(1, 8)})
    p = tmp_path / "c.schem"
    p.write_bytes(schem_bytes(w, h, l, palette, flat))
    world = load_schematic(p)
    names = world.names_by_index
    for y in range(h):
        for z in range(l):
            for x in range(w):
                idx = x + z * w + y * w * l
                assert query(world, (x, y, z)) == names[idx]


def test_schematic_missing_field(tmp_path):
    root = nbt.Compound({"Width": nbt.Short(1)})
    p = tmp_path / "d.schem"
    p.write_bytes(gzip.compress(nbt.encode_nbt("Schematic", root)))
    with pytest.raises(MissingField):
        load_schematic(p)


def test_schematic_palette_out_of_range(tmp_path):
    p = tmp_path / "e.schem"
    p.write_bytes(schem_bytes(1, 1, 1, {AIR: 0, "minecraft:stone": 1}, [7]))
    with pytest.raises(PaletteIndexOutOfRange):
        load_schematic(p)


def test_varint_round_trip_200_entry_palette():
    values = list(range(200))
    data = b"".join(encode_varint(v) for v in values)
    assert decode_varints(data, 200) == values
    assert len(encode_varint(199)) == 2  # 2-byte varints past 127


def test_varint_overflow():
    with pytest.raises(VarintOverflow):
        decode_varints(b"\x80\x80\x80\x80\x80\x80\x01", 1)


def test_query_out_of_bounds_is_air():
    world = WorldMap(Aabb((0, 0, 0), (0, 0, 0)), {AIR: 0},
                     np.zeros((1, 1, 1), dtype=np.int32))
    assert query(world, (5, 5, 5)) == AIR
    assert query(world, (-1, 0, 0)) == AIR


def test_world_json_and_exhaustive_query(tmp_path):
    rng = np.random.default_rng(5)
    names = [AIR, "minecraft:stone", "minecraft:oak_planks"]
    blocks = []
    expect = {}
    for x in range(4):
        for y in range(4):
            for z in range(4):
                n = names[rng.integers(0, 3)]
                expect[(x, y, z)] = n
                if n != AIR:
                    blocks.append([x, y, z, n])
    p = tmp_path / "world.json"
    p.write_text(json.dumps({"bounds": {"min": [0, 0, 0], "max": [3, 3, 3]},
                             "blocks": blocks}))
    world = load_world_json(p)
    for coord, n in expect.items():
        assert query(world, coord) == n


def test_strip_block_state():
    assert strip_block_state("minecraft:oak_stairs[facing=north]") == "minecraft:oak_stairs"
    assert strip_block_state("minecraft:stone") == "minecraft:stone"


def test_block_class_full_name_first():
    cmap = ClassMap({"mod:chair[facing=east]": 5, "mod:chair": 8}, None)
    assert block_class("mod:chair[facing=east]", cmap) == 5
    assert block_class("mod:chair[facing=west]", cmap) == 8
    assert block_class("minecraft:air", cmap) == 0
    assert block_class("minecraft:air[level=0]", cmap) == 0


def make_world(entries, bounds):
    palette = {AIR: 0}
    blocks = np.zeros(bounds.dims, dtype=np.int32)
    for coord, name in entries.items():
        if name not in palette:
            palette[name] = len(palette)
        i = tuple(c - o for c, o in zip(coord, bounds.min))
        blocks[i] = palette[name]
    return WorldMap(bounds, palette, blocks)


CMAP = ClassMap({"minecraft:stone": 3, "mod:chair": 5},
                CANONICAL_TABLE.id_of("objects"))


def test_extract_outside_world_is_empty():
    world = make_world({}, Aabb((0, 0, 0), (3, 3, 3)))
    g = extract_occupancy(world, Aabb((10, 10, 10), (12, 12, 12)),
                          CMAP, CANONICAL_TABLE)
    assert not g.labels.any()
    assert g.origin == (10, 10, 10)


def test_extract_single_chair():
    world = make_world({(1, 0, 1): "mod:chair"}, Aabb((0, 0, 0), (3, 3, 3)))
    g = extract_occupancy(world, Aabb((0, 0, 0), (1, 1, 1)),
                          CMAP, CANONICAL_TABLE)
    assert g.label_at((1, 0, 1)) == 5
    assert int((g.labels != 0).sum()) == 1


def test_extract_matches_brute_force_oracle():
    rng = np.random.default_rng(6)
    bounds = Aabb((0, 0, 0), (9, 9, 9))
    entries = {}
    for _ in range(150):
        coord = tuple(int(v) for v in rng.integers(0, 10, 3))
        entries[coord] = rng.choice(["minecraft:stone", "mod:chair", "mod:weird"])
    world = make_world(entries, bounds)
    box = Aabb((2, -1, 3), (9, 6, 10))
    g = extract_occupancy(world, box, CMAP, CANONICAL_TABLE)
    # independent double loop: query then remap each voxel
    counts = np.zeros(12, dtype=int)
    for x in range(box.min[0], box.max[0] + 1):
        for y in range(box.min[1], box.max[1] + 1):
            for z in range(box.min[2], box.max[2] + 1):
                name = query(world, (x, y, z))
                cid = block_class(name, CMAP)
                counts[cid] += 1
                assert g.label_at((x, y, z)) == cid
    assert (g.class_counts() == counts).all()


def test_extract_locality():
    world = make_world({(2, 2, 2): "minecraft:stone", (5, 5, 5): "mod:chair"},
                       Aabb((0, 0, 0), (7, 7, 7)))
    big = extract_occupancy(world, Aabb((0, 0, 0), (7, 7, 7)),
                            CMAP, CANONICAL_TABLE)
    sub_box = Aabb((1, 1, 1), (6, 6, 6))
    sub = extract_occupancy(world, sub_box, CMAP, CANONICAL_TABLE)
    for x in range(1, 7):
        for y in range(1, 7):
            for z in range(1, 7):
                assert sub.label_at((x, y, z)) == big.label_at((x, y, z))


def test_schematic_block_count_preserved(tmp_path):
    p = tmp_path / "f.schem"
    p.write_bytes(schem_bytes(3, 2, 4, {AIR: 0}, [0] * 24))
    world = load_schematic(p)
    assert world.blocks.size == 24
