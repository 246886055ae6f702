"""Build plans: ordered Clear/Fill/SetBlock command lists with greedy
cuboid coalescing, a decode-back oracle, and text rendering.

Structural classes are rendered voxel-exact via coalesced fills; object
instances are stamped from matched templates, falling back to raw voxels
when no template fits. Overlaps resolve last-writer-wins and are reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .centers import CenterSet
from .grid import Aabb, ClassTable, Coord, EMPTY_ID, SemanticGrid
from .templates import MatchResult, Template, rotate_template

AIR = "minecraft:air"

# Default vanilla block per non-empty canonical class; all distinct so a
# plan decodes back unambiguously.
DEFAULT_BLOCK_TABLE = {
    1: "minecraft:white_concrete",   # ceiling
    2: "minecraft:oak_planks",       # floor
    3: "minecraft:smooth_quartz",    # wall
    4: "minecraft:glass",            # window
    5: "minecraft:oak_stairs",       # chair
    6: "minecraft:red_wool",         # bed
    7: "minecraft:blue_wool",        # sofa
    8: "minecraft:crafting_table",   # table
    9: "minecraft:black_concrete",   # tvs
    10: "minecraft:bookshelf",       # furniture
    11: "minecraft:terracotta",      # objects
}

DEFAULT_STRUCTURAL_CLASSES = (1, 2, 3, 4)  # ceiling, floor, wall, window


class PlanError(Exception):
    pass


class UnknownBlockName(PlanError):
    pass


@dataclass(frozen=True)
class SetBlock:
    pos: Coord
    block: str


@dataclass(frozen=True)
class Fill:
    box: Aabb
    block: str


@dataclass(frozen=True)
class Clear:
    box: Aabb


@dataclass(frozen=True)
class BuildPlan:
    commands: tuple
    bounds: Aabb
    block_table: dict = field(default_factory=dict)  # class id -> block name


@dataclass
class PlanDiagnostics:
    conflicts: list = field(default_factory=list)  # (coord, old block, new block)
    fallback_centers: list = field(default_factory=list)
    clipped: int = 0


def coalesce_cuboids(grid: SemanticGrid, class_ids, block_table) -> list[Fill]:
    """Greedy exact cuboid cover per class: extend runs along x, widen
    equal runs along z, stack equal slabs along y. Boxes are disjoint and
    their union is exactly the class's voxel set."""
    if not class_ids:
        raise PlanError("class set must be non-empty")
    ox, oy, oz = grid.origin
    X, Y, Z = grid.dims
    fills = []
    for class_id in sorted(set(class_ids)):
        mask = grid.labels == class_id
        if not mask.any():
            continue
        done = np.zeros_like(mask)
        for y in range(Y):
            for z in range(Z):
                x = 0
                while x < X:
                    if not mask[x, y, z] or done[x, y, z]:
                        x += 1
                        continue
                    x2 = x
                    while x2 + 1 < X and mask[x2 + 1, y, z] and not done[x2 + 1, y, z]:
                        x2 += 1
                    z2 = z
                    while z2 + 1 < Z and mask[x:x2 + 1, y, z2 + 1].all() \
                            and not done[x:x2 + 1, y, z2 + 1].any():
                        z2 += 1
                    y2 = y
                    while y2 + 1 < Y and mask[x:x2 + 1, y2 + 1, z:z2 + 1].all() \
                            and not done[x:x2 + 1, y2 + 1, z:z2 + 1].any():
                        y2 += 1
                    done[x:x2 + 1, y:y2 + 1, z:z2 + 1] = True
                    fills.append(Fill(Aabb((x + ox, y + oy, z + oz),
                                           (x2 + ox, y2 + oy, z2 + oz)),
                                      block_table[class_id]))
                    x = x2 + 1
    return fills


@dataclass(frozen=True)
class PlanConfig:
    structural_classes: tuple = DEFAULT_STRUCTURAL_CLASSES
    block_table: dict = field(default_factory=lambda: dict(DEFAULT_BLOCK_TABLE))
    min_iou: float = 0.25


def emit_plan(grid: SemanticGrid, centers: CenterSet, matches,
              library: list[Template] | None = None,
              config: PlanConfig = PlanConfig()):
    """Clear + structural fills + per-instance stamps, in a fixed order.

    matches[i] corresponds to centers.centers[i]; None entries (and
    matches below the IoU floor) fall back to raw-voxel stamping of the
    instance's member voxels. Returns (plan, diagnostics).
    """
    if len(matches) != len(centers.centers):
        raise PlanError("matches must correspond 1:1 to centers")
    bounds = grid.bounds
    diags = PlanDiagnostics()
    commands: list = [Clear(bounds)]
    written: dict[Coord, str] = {}

    structural = [c for c in config.structural_classes
                  if (grid.labels == c).any()]
    if structural:
        for f in coalesce_cuboids(grid, structural, config.block_table):
            commands.append(f)
            for v in _box_coords(f.box):
                written[v] = f.block

    def stamp(pos: Coord, block: str):
        if not bounds.contains(pos):
            diags.clipped += 1
            return
        if pos in written and written[pos] != block:
            diags.conflicts.append((pos, written[pos], block))
        written[pos] = block
        commands.append(SetBlock(pos, block))

    for center, match in sorted(zip(centers.centers, matches),
                                key=lambda cm: cm[0].id):
        use_template = (match is not None and match.iou >= config.min_iou
                        and library is not None)
        if use_template:
            t = rotate_template(library[match.template_index], match.rotation)
            recipe = t.blocks or tuple((v, config.block_table[t.class_id])
                                       for v in t.voxels)
            for offset, block in recipe:
                pos = tuple(o + d for o, d in zip(offset, match.placement))
                stamp(pos, block)
        else:
            diags.fallback_centers.append(center.id)
            block = config.block_table[center.class_id]
            for v in sorted(center.member_voxels):
                stamp(tuple(v), block)

    plan = BuildPlan(tuple(commands), bounds, dict(config.block_table))
    return plan, diags


def _box_coords(box: Aabb):
    (x1, y1, z1), (x2, y2, z2) = box.min, box.max
    for x in range(x1, x2 + 1):
        for y in range(y1, y2 + 1):
            for z in range(z1, z2 + 1):
                yield (x, y, z)


def decode_plan(plan: BuildPlan, class_of_block: dict,
                table: ClassTable) -> SemanticGrid:
    """Replay commands in order into an empty grid over plan.bounds."""
    labels = np.zeros(plan.bounds.dims, dtype=np.uint16)
    origin = plan.bounds.min

    def local(box: Aabb):
        return tuple(slice(a - o, b - o + 1)
                     for a, b, o in zip(box.min, box.max, origin))

    for cmd in plan.commands:
        if isinstance(cmd, Clear):
            labels[local(cmd.box)] = EMPTY_ID
        elif isinstance(cmd, Fill):
            labels[local(cmd.box)] = _resolve(cmd.block, class_of_block)
        elif isinstance(cmd, SetBlock):
            i = tuple(c - o for c, o in zip(cmd.pos, origin))
            labels[i] = _resolve(cmd.block, class_of_block)
        else:
            raise PlanError(f"unknown command {cmd!r}")
    return SemanticGrid(origin, labels, table)


def _resolve(block: str, class_of_block: dict) -> int:
    if block == AIR:
        return EMPTY_ID
    try:
        return class_of_block[block]
    except KeyError:
        raise UnknownBlockName(block) from None


def invert_block_table(block_table: dict) -> dict:
    """block name -> class id, for decode_plan."""
    return {b: c for c, b in block_table.items()}


def render_commands(plan: BuildPlan, dialect: str = "vanilla") -> list[str]:
    """Text command lines; byte-stable for a given plan."""
    lines = []
    if dialect == "vanilla":
        for cmd in plan.commands:
            if isinstance(cmd, Clear):
                lines.append(_fill_line(cmd.box, AIR))
            elif isinstance(cmd, Fill):
                lines.append(_fill_line(cmd.box, cmd.block))
            elif isinstance(cmd, SetBlock):
                x, y, z = cmd.pos
                lines.append(f"setblock {x} {y} {z} {cmd.block}")
    elif dialect == "worldedit":
        for cmd in plan.commands:
            if isinstance(cmd, (Clear, Fill)):
                box = cmd.box
                block = AIR if isinstance(cmd, Clear) else cmd.block
                lines.append("//pos1 {},{},{}".format(*box.min))
                lines.append("//pos2 {},{},{}".format(*box.max))
                lines.append(f"//set {block}")
            elif isinstance(cmd, SetBlock):
                lines.append("//pos1 {},{},{}".format(*cmd.pos))
                lines.append("//pos2 {},{},{}".format(*cmd.pos))
                lines.append(f"//set {cmd.block}")
    else:
        raise PlanError(f"unknown dialect {dialect!r}")
    return lines


def _fill_line(box: Aabb, block: str) -> str:
    (x1, y1, z1), (x2, y2, z2) = box.min, box.max
    return f"fill {x1} {y1} {z1} {x2} {y2} {z2} {block}"


# ---------------------------------------------------------------------------
# plan.json

def _cmd_to_json(cmd):
    if isinstance(cmd, Clear):
        return {"op": "clear", "box": cmd.box.to_json()}
    if isinstance(cmd, Fill):
        return {"op": "fill", "box": cmd.box.to_json(), "block": cmd.block}
    return {"op": "setblock", "pos": list(cmd.pos), "block": cmd.block}


def save_plan(plan: BuildPlan, path) -> None:
    data = {
        "bounds": plan.bounds.to_json(),
        "block_table": {str(k): v for k, v in plan.block_table.items()},
        "commands": [_cmd_to_json(c) for c in plan.commands],
    }
    Path(path).write_text(json.dumps(data, indent=1))


def load_plan(path) -> BuildPlan:
    data = json.loads(Path(path).read_text())
    commands = []
    for c in data["commands"]:
        if c["op"] == "clear":
            commands.append(Clear(Aabb.from_json(c["box"])))
        elif c["op"] == "fill":
            commands.append(Fill(Aabb.from_json(c["box"]), c["block"]))
        elif c["op"] == "setblock":
            commands.append(SetBlock(tuple(c["pos"]), c["block"]))
        else:
            raise PlanError(f"unknown op {c['op']!r}")
    block_table = {int(k): v for k, v in data.get("block_table", {}).items()}
    return BuildPlan(tuple(commands), Aabb.from_json(data["bounds"]), block_table)


def save_command_text(plan: BuildPlan, path, dialect: str = "vanilla") -> None:
    Path(path).write_text("\n".join(render_commands(plan, dialect)) + "\n")
