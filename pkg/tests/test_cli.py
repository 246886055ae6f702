import json
import shutil
import threading
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from voxplan.cli import main
from voxplan.grid import CANONICAL_TABLE, SemanticGrid, load_grid, save_grid
from voxplan.plan import load_plan, render_commands

SAMPLE = Path(__file__).resolve().parent.parent / "sample"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def room(tmp_path):
    """A scratch copy of the bundled sample project."""
    shutil.copytree(SAMPLE, tmp_path / "sample")
    return tmp_path / "sample"


def invoke(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


def test_usage_error_exits_2(runner):
    result = runner.invoke(main, ["centers", "--bogus"])
    assert result.exit_code == 2


def test_runtime_error_exits_1_with_error_line(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(main, ["centers", "--in", str(bad),
                                  "--out", str(tmp_path / "c.json")])
    assert result.exit_code == 1
    assert "error:" in result.output


def test_centers_command(runner, room, tmp_path):
    out = tmp_path / "centers.json"
    result = invoke(runner, ["centers", "--in", str(room / "room/occ.json"),
                             "--tau", "0.2", "--eta", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert len(data) > 0
    assert {"id", "class", "pos", "members"} <= set(data[0])


def test_match_command(runner, room, tmp_path):
    out = tmp_path / "matches.json"
    result = invoke(runner, ["match", "--in", str(room / "room/occ.json"),
                             "--centers", str(room / "room/centers.json"),
                             "--templates", str(room / "room/templates.json"),
                             "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = json.loads(out.read_text())
    matched = {r["class"]: r["match"] for r in rows if r["match"]}
    assert matched["sofa"]["iou"] == 1.0
    assert matched["table"]["iou"] == 1.0


def test_plan_and_dry_run_apply(runner, room, tmp_path):
    plan_path = tmp_path / "plan.json"
    result = invoke(runner, ["plan", "--in", str(room / "room/occ.json"),
                             "--centers", str(room / "room/centers.json"),
                             "--templates", str(room / "room/templates.json"),
                             "--out", str(plan_path)])
    assert result.exit_code == 0, result.output
    plan = load_plan(plan_path)
    result = invoke(runner, ["apply", "--plan", str(plan_path), "--dry-run"])
    assert result.exit_code == 0
    assert result.output.splitlines() == render_commands(plan, "vanilla")


def test_apply_requires_password(runner, room, tmp_path, monkeypatch):
    monkeypatch.delenv("VOXPLAN_RCON_PASSWORD", raising=False)
    plan_path = tmp_path / "plan.json"
    invoke(runner, ["plan", "--in", str(room / "room/occ.json"),
                    "--centers", str(room / "room/centers.json"),
                    "--out", str(plan_path)])
    result = runner.invoke(main, ["apply", "--plan", str(plan_path)])
    assert result.exit_code == 1
    assert "password" in result.output


def test_convert_round_trip(runner, room, tmp_path):
    vxg = tmp_path / "room.vxg"
    back = tmp_path / "room.json"
    assert invoke(runner, ["convert", "--in", str(room / "room/occ.json"),
                           "--out", str(vxg)]).exit_code == 0
    assert invoke(runner, ["convert", "--in", str(vxg),
                           "--out", str(back)]).exit_code == 0
    a = load_grid(room / "room/occ.json")
    b = load_grid(back)
    assert (a.labels == b.labels).all()
    assert a.origin == b.origin


def test_remap_command(runner, room, tmp_path):
    # a source grid using modded names; map collapses them onto canonical
    from voxplan.grid import ClassTable
    src_table = ClassTable(("empty", "tmeo_ultra:shafa_1x_2"))
    labels = np.zeros((2, 2, 2), dtype=np.uint16)
    labels[0, 0, 0] = 1
    src = tmp_path / "src.vxg"
    save_grid(SemanticGrid((0, 0, 0), labels, src_table), src)
    out = tmp_path / "out.vxg"
    result = invoke(runner, ["remap", "--in", str(src),
                             "--classmap", str(room / "classmap.json"),
                             "--out", str(out)])
    assert result.exit_code == 0, result.output
    g = load_grid(out)
    assert g.label_at((0, 0, 0)) == CANONICAL_TABLE.id_of("sofa")


def test_extract_one_grid_per_pose(runner, room, tmp_path):
    out = tmp_path / "grids"
    result = invoke(runner, ["extract", "--world", str(room / "world.json"),
                             "--poses", str(room / "poses.json"),
                             "--dims", "12", "6", "12",
                             "--classmap", str(room / "classmap.json"),
                             "--out", str(out)])
    assert result.exit_code == 0, result.output
    files = sorted(p.name for p in out.glob("*.vxg"))
    assert files == ["f000.vxg", "f001.vxg", "f002.vxg"]
    g = load_grid(out / "f000.vxg")
    # the forward-facing view contains the modded sofa mapped to class sofa
    assert (g.labels == CANONICAL_TABLE.id_of("sofa")).sum() == 2
    assert not (out / ".voxplan.lock").exists()


def test_extract_lock_blocks_concurrent_run(runner, room, tmp_path):
    out = tmp_path / "grids"
    out.mkdir()
    (out / ".voxplan.lock").write_text("12345")
    result = runner.invoke(main, ["extract", "--world", str(room / "world.json"),
                                  "--poses", str(room / "poses.json"),
                                  "--dims", "12", "6", "12",
                                  "--out", str(out)])
    assert result.exit_code == 1
    assert "locked" in result.output


def test_fuse_identity_views(runner, room, tmp_path):
    out = tmp_path / "fused.vxg"
    occ = str(room / "room/occ.json")
    result = invoke(runner, ["fuse", "--grid", occ, "--grid", occ,
                             "--bounds", "0", "0", "0", "13", "5", "13",
                             "--out", str(out)])
    assert result.exit_code == 0, result.output
    fused = load_grid(out)
    original = load_grid(occ)
    assert (fused.labels == original.labels).all()


def test_stage_separability_matches_monolith(runner, room, tmp_path):
    """centers -> plan via files equals reconstruct_scene in-process."""
    from voxplan.camera import Extrinsics
    from voxplan.fusion import ViewObservation
    from voxplan.pipeline import reconstruct_scene
    from voxplan.templates import load_templates

    occ = room / "room/occ.json"
    grid = load_grid(occ)
    library = load_templates(room / "room/templates.json")
    centers_path = tmp_path / "c.json"
    plan_path = tmp_path / "p.json"
    invoke(runner, ["centers", "--in", str(occ), "--out", str(centers_path)])
    invoke(runner, ["plan", "--in", str(occ), "--centers", str(centers_path),
                    "--templates", str(room / "room/templates.json"),
                    "--out", str(plan_path)])
    staged = load_plan(plan_path)
    mono, _, _ = reconstruct_scene(
        [ViewObservation(grid, Extrinsics.identity())], grid.bounds, library)
    assert staged == mono
