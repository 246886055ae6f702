import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxplan.grid import (
    CANONICAL_TABLE, Aabb, ClassMap, ClassTable, DimensionMismatch,
    FormatError, SemanticGrid, TargetIdOutOfRange, UnknownClass,
    UnknownVersion, load_grid, remap_classes, save_grid,
)


def make_grid(labels, origin=(0, 0, 0), table=CANONICAL_TABLE):
    return SemanticGrid(origin, np.asarray(labels, dtype=np.uint16), table)


def test_class_table_invariants():
    assert CANONICAL_TABLE.names[0] == "empty"
    assert len(CANONICAL_TABLE) == 12
    with pytest.raises(ValueError):
        ClassTable(("a", "a"))
    with pytest.raises(ValueError):
        ClassTable(("a", ""))


def test_index_bijection_small_dims():
    # idx = x + X*(y + Y*z) must be a bijection on a small grid
    X, Y, Z = 3, 4, 5
    labels = np.arange(X * Y * Z, dtype=np.uint16).reshape((X, Y, Z), order="F")
    seen = set()
    for x in range(X):
        for y in range(Y):
            for z in range(Z):
                idx = x + X * (y + Y * z)
                assert labels[x, y, z] == idx
                seen.add(idx)
    assert seen == set(range(X * Y * Z))


def test_label_at_world_coords():
    g = make_grid(np.zeros((2, 2, 2)), origin=(10, 20, 30))
    labels = np.zeros((2, 2, 2), dtype=np.uint16)
    labels[1, 0, 1] = 5
    g = g.with_labels(labels)
    assert g.label_at((11, 20, 31)) == 5
    assert g.in_bounds((10, 20, 30)) and not g.in_bounds((9, 20, 30))
    with pytest.raises(IndexError):
        g.label_at((9, 20, 30))


def test_remap_fine_grained_sofa_example():
    src_table = ClassTable(("empty", "tmeo_ultra:shafa_1x_2"))
    cmap = ClassMap({"tmeo_ultra:shafa_1x_2": CANONICAL_TABLE.id_of("sofa")}, None)
    g = make_grid([[[1]]], table=src_table)
    out = remap_classes(g, cmap, CANONICAL_TABLE)
    assert out.label_at((0, 0, 0)) == CANONICAL_TABLE.id_of("sofa")
    assert out.dims == g.dims and out.origin == g.origin


def test_remap_empty_stays_empty():
    src_table = ClassTable(("empty", "anything"))
    cmap = ClassMap({"anything": 3}, None)
    g = make_grid(np.zeros((3, 3, 3)), table=src_table)
    out = remap_classes(g, cmap, CANONICAL_TABLE)
    assert not out.labels.any()


def test_remap_identity_preserves_multiset():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 12, size=(10, 10, 10), dtype=np.uint16)
    g = make_grid(labels)
    out = remap_classes(g, ClassMap.identity(CANONICAL_TABLE), CANONICAL_TABLE)
    # counting oracle: per-class voxel counts before/after
    before = np.bincount(labels.ravel(), minlength=12)
    after = np.bincount(out.labels.ravel(), minlength=12)
    assert (before == after).all()


def test_remap_identity_idempotent():
    rng = np.random.default_rng(1)
    g = make_grid(rng.integers(0, 12, size=(4, 4, 4), dtype=np.uint16))
    ident = ClassMap.identity(CANONICAL_TABLE)
    once = remap_classes(g, ident, CANONICAL_TABLE)
    twice = remap_classes(once, ident, CANONICAL_TABLE)
    assert (once.labels == twice.labels).all()


def test_remap_unknown_class_errors():
    src_table = ClassTable(("empty", "mystery"))
    g = make_grid([[[1]]], table=src_table)
    with pytest.raises(UnknownClass):
        remap_classes(g, ClassMap({}, None), CANONICAL_TABLE)
    # default enabled: falls back to the default target
    out = remap_classes(g, ClassMap({}, CANONICAL_TABLE.id_of("objects")),
                        CANONICAL_TABLE)
    assert out.label_at((0, 0, 0)) == CANONICAL_TABLE.id_of("objects")


def test_classmap_target_out_of_range():
    with pytest.raises(TargetIdOutOfRange):
        ClassMap({"x": 99}, None).validate(CANONICAL_TABLE)


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    g = make_grid(rng.integers(0, 12, size=(2, 2, 2), dtype=np.uint16),
                  origin=(-3, 64, 7))
    p = tmp_path / "g.vxg"
    save_grid(g, p)
    g2 = load_grid(p)
    assert g2.origin == g.origin and g2.dims == g.dims
    assert (g2.labels == g.labels).all()
    assert g2.class_table.names == g.class_table.names


def test_binary_byte_stable(tmp_path):
    rng = np.random.default_rng(3)
    g = make_grid(rng.integers(0, 12, size=(4, 3, 2), dtype=np.uint16))
    p1, p2 = tmp_path / "a.vxg", tmp_path / "b.vxg"
    save_grid(g, p1)
    save_grid(load_grid(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_binary_dimension_mismatch(tmp_path):
    g = make_grid(np.zeros((4, 4, 4)))
    p = tmp_path / "g.vxg"
    save_grid(g, p)
    data = p.read_bytes()
    p.write_bytes(data[:-2])  # 63 labels declared as 64
    with pytest.raises(DimensionMismatch):
        load_grid(p)


def test_binary_bad_magic_and_version(tmp_path):
    p = tmp_path / "g.vxg"
    p.write_bytes(b"NOPE1234")
    with pytest.raises(FormatError):
        load_grid(p)
    p.write_bytes(b"VXG9" + b"\x00" * 30)
    with pytest.raises(UnknownVersion):
        load_grid(p)


def test_occ_json_sparse(tmp_path):
    p = tmp_path / "occ.json"
    p.write_text('{"dims": [4, 4, 4], "classes": %s,'
                 ' "voxels": [[1, 2, 3, "chair"]]}'
                 % list(CANONICAL_TABLE.names).__repr__().replace("'", '"'))
    g = load_grid(p)
    assert g.label_at((1, 2, 3)) == CANONICAL_TABLE.id_of("chair")
    assert int((g.labels != 0).sum()) == 1


def test_occ_json_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    g = make_grid(rng.integers(0, 12, size=(5, 4, 3), dtype=np.uint16),
                  origin=(1, 2, 3))
    p = tmp_path / "g.json"
    save_grid(g, p)
    g2 = load_grid(p)
    assert g2.origin == g.origin and (g2.labels == g.labels).all()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3),
                          st.integers(0, 3), st.integers(0, 11)), max_size=20))
def test_occ_json_property_round_trip(tmp_path_factory, voxels):
    labels = np.zeros((4, 4, 4), dtype=np.uint16)
    for x, y, z, c in voxels:
        labels[x, y, z] = c
    g = make_grid(labels)
    p = tmp_path_factory.mktemp("occ") / "g.json"
    save_grid(g, p)
    assert (load_grid(p).labels == labels).all()


def test_aabb():
    b = Aabb((0, 0, 0), (3, 2, 1))
    assert b.volume == 4 * 3 * 2
    assert b.contains((3, 2, 1)) and not b.contains((4, 0, 0))
    with pytest.raises(ValueError):
        Aabb((1, 0, 0), (0, 0, 0))
