"""Command-line entry point: one subcommand per pipeline stage plus the
dataset-direction flows and the HTTP service.

Every stage reads and writes the documented file formats so external
tools (or a human editor) can intervene between any two stages. Exit
codes: 0 success, 1 runtime error (with a machine-readable ``error:``
line on stderr), 2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import rcon as rcon_mod
from .camera import extrinsics_from_pose, load_poses
from .centers import load_centers, save_centers
from .fusion import ViewObservation, fuse_views
from .grid import Aabb, CANONICAL_TABLE, ClassMap, load_grid, remap_classes, save_grid
from .pipeline import PipelineConfig, compute_centers, match_centers
from .plan import emit_plan, load_plan, render_commands, save_command_text, save_plan
from .templates import load_templates
from .viewvol import (
    VolumeSpec, apply_offset, classify_view_case, compute_view_volume,
    default_offset,
)
from .worldmap import extract_occupancy, load_schematic, load_world_json

PASSWORD_ENV = "VOXPLAN_RCON_PASSWORD"
CONFIG_ENV = "VOXPLAN_CONFIG"


class RuntimeFailure(click.ClickException):
    exit_code = 1

    def show(self, file=None):
        click.echo(f"error: {self.message}", err=True)


def _config(config_path, **overrides) -> PipelineConfig:
    path = config_path or os.environ.get(CONFIG_ENV)
    cfg = PipelineConfig.from_json(path) if path else PipelineConfig()
    return cfg.merged(overrides)


def _run(fn):
    try:
        return fn()
    except click.ClickException:
        raise
    except Exception as e:
        raise RuntimeFailure(f"{type(e).__name__}: {e}") from e


@click.group()
@click.version_option(package_name="voxplan")
def main():
    """Semantic-voxel scene reconstruction toolkit."""


_config_option = click.option("--config", "config_path", type=click.Path(exists=True),
                              default=None, help="Pipeline config JSON "
                              f"(or ${CONFIG_ENV}); flags override it.")
_seed_option = click.option("--seed", type=int, default=None,
                            help="Reserved; no stage is randomized (no-op).")


@main.command()
@click.option("--grid", "grids", type=click.Path(exists=True), multiple=True,
              required=True, help="Per-view grid file; repeatable, ordered.")
@click.option("--poses", "poses_path", type=click.Path(exists=True), default=None,
              help="poses.json matched to --grid order; identity if omitted.")
@click.option("--bounds", nargs=6, type=int, required=True,
              metavar="X1 Y1 Z1 X2 Y2 Z2", help="Output volume (inclusive).")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_seed_option
def fuse(grids, poses_path, bounds, out_path, seed):
    """Fuse per-view grids into one world-anchored grid (majority vote)."""
    def go():
        views = [load_grid(p) for p in grids]
        if poses_path:
            records = load_poses(poses_path)
            if len(records) != len(views):
                raise RuntimeFailure(
                    f"{len(views)} grids but {len(records)} poses")
            ext = [extrinsics_from_pose(r.pose) for r in records]
        else:
            from .camera import Extrinsics
            ext = [Extrinsics.identity() for _ in views]
        obs = [ViewObservation(g, e) for g, e in zip(views, ext)]
        box = Aabb(tuple(bounds[:3]), tuple(bounds[3:]))
        save_grid(fuse_views(obs, box), out_path)
        click.echo(f"fused {len(views)} views -> {out_path}")
    _run(go)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=None, help="Density kernel size (odd).")
@click.option("--tau", type=float, default=None, help="Density threshold.")
@click.option("--eta", type=float, default=None, help="Cluster radius.")
@click.option("--min-pts", type=int, default=None, help="Core-point floor.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_config_option
@_seed_option
def centers(in_path, k, tau, eta, min_pts, out_path, config_path, seed):
    """Extract object centers: density, threshold, per-class clustering."""
    def go():
        cfg = _config(config_path, kernel_size=k, tau=tau, eta=eta,
                      min_pts=min_pts)
        grid = load_grid(in_path)
        cs = compute_centers(grid, cfg)
        save_centers(cs, grid.class_table, out_path)
        click.echo(f"{len(cs.centers)} centers "
                   f"({cs.noise_count} noise) -> {out_path}")
    _run(go)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--centers", "centers_path", type=click.Path(exists=True),
              required=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True),
              required=True)
@click.option("--radius", type=int, default=None, help="Instance crop radius.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_config_option
def match(in_path, centers_path, templates_path, radius, out_path, config_path):
    """Match each center against the template library by voxel IoU."""
    def go():
        cfg = _config(config_path, crop_radius=radius)
        grid = load_grid(in_path)
        cs = load_centers(centers_path, grid.class_table)
        library = load_templates(templates_path)
        enriched, matches = match_centers(grid, cs, library, cfg)
        rows = []
        for c, m in zip(enriched.centers, matches):
            row = {"center": c.id, "class": grid.class_table.names[c.class_id]}
            if m is None:
                row["match"] = None
            else:
                row["match"] = {"template": library[m.template_index].name,
                                "template_index": m.template_index,
                                "rotation": m.rotation, "iou": m.iou,
                                "placement": list(m.placement)}
            rows.append(row)
        Path(out_path).write_text(json.dumps(rows, indent=1))
        matched = sum(1 for r in rows if r["match"])
        click.echo(f"{matched}/{len(rows)} centers matched -> {out_path}")
    _run(go)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--centers", "centers_path", type=click.Path(exists=True),
              required=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True),
              default=None)
@click.option("--min-iou", type=float, default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--commands", "commands_path", type=click.Path(), default=None,
              help="Also write rendered vanilla commands to this file.")
@_config_option
def plan(in_path, centers_path, templates_path, min_iou, out_path,
         commands_path, config_path):
    """Emit a build plan: clear, structural fills, instance stamps."""
    def go():
        cfg = _config(config_path, min_iou=min_iou)
        grid = load_grid(in_path)
        cs = load_centers(centers_path, grid.class_table)
        library = load_templates(templates_path) if templates_path else []
        enriched, matches = match_centers(grid, cs, library, cfg)
        built, diags = emit_plan(grid, enriched, matches, library,
                                 cfg.plan_config())
        save_plan(built, out_path)
        if commands_path:
            save_command_text(built, commands_path)
        click.echo(f"{len(built.commands)} commands "
                   f"({len(diags.conflicts)} conflicts, "
                   f"{len(diags.fallback_centers)} fallbacks) -> {out_path}")
    _run(go)


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=rcon_mod.DEFAULT_PORT)
@click.option("--password", default=None,
              help=f"RCON password (or ${PASSWORD_ENV}).")
@click.option("--throttle", type=float, default=20.0,
              help="Maximum commands per second.")
@click.option("--dry-run", is_flag=True,
              help="Print rendered commands; send nothing.")
def apply(plan_path, host, port, password, throttle, dry_run):
    """Dispatch a plan to a live server over RCON."""
    def go():
        built = load_plan(plan_path)
        lines = render_commands(built, "vanilla")
        if dry_run:
            for line in lines:
                click.echo(line)
            return
        secret = password if password is not None \
            else os.environ.get(PASSWORD_ENV)
        if secret is None:
            raise RuntimeFailure(
                f"no RCON password: pass --password or set ${PASSWORD_ENV}")
        with rcon_mod.connect_and_auth(host, port, secret) as session:
            report = rcon_mod.apply_plan(session, built, throttle=throttle)
        click.echo(f"sent {report.sent}/{len(lines)} commands, "
                   f"{report.failed} failed, {report.duration:.1f}s"
                   + (" (aborted)" if report.aborted else ""))
        if report.failed:
            raise RuntimeFailure(f"{report.failed} commands failed")
    _run(go)


@main.command()
@click.option("--world", "world_path", type=click.Path(exists=True),
              required=True, help=".schem or world.json scene file.")
@click.option("--poses", "poses_path", type=click.Path(exists=True),
              required=True)
@click.option("--dims", nargs=3, type=int, required=True, metavar="W H D",
              help="View-volume size.")
@click.option("--classmap", "classmap_path", type=click.Path(exists=True),
              default=None, help="Block-name to class mapping (classmap.json).")
@click.option("--offset", nargs=3, type=int, default=None,
              help="Correctional volume offset; default per view case.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def extract(world_path, poses_path, dims, classmap_path, offset, out_dir):
    """Cut ground-truth occupancy grids from a world, one per pose."""
    def go():
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lock = out / ".voxplan.lock"
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeFailure(
                f"output directory is locked by another run ({lock})")
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        try:
            if str(world_path).endswith(".json"):
                world = load_world_json(world_path)
            else:
                world = load_schematic(world_path)
            cmap = (ClassMap.from_json(classmap_path, CANONICAL_TABLE)
                    if classmap_path else ClassMap.identity(CANONICAL_TABLE))
            spec = VolumeSpec(*dims)
            for record in load_poses(poses_path):
                case = classify_view_case(record.pose.yaw)
                box = compute_view_volume(record.pose.position, case, spec)
                eps = tuple(offset) if offset is not None \
                    else default_offset(case)
                box = apply_offset(box, eps)
                grid = extract_occupancy(world, box, cmap, CANONICAL_TABLE)
                save_grid(grid, out / f"{record.frame}.vxg")
            click.echo(f"wrote {len(load_poses(poses_path))} grids -> {out}")
        finally:
            lock.unlink(missing_ok=True)
    _run(go)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--classmap", "classmap_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def remap(in_path, classmap_path, out_path):
    """Remap a grid's class labels onto the canonical table."""
    def go():
        grid = load_grid(in_path)
        cmap = ClassMap.from_json(classmap_path, CANONICAL_TABLE)
        save_grid(remap_classes(grid, cmap, CANONICAL_TABLE), out_path)
        click.echo(f"remapped -> {out_path}")
    _run(go)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def convert(in_path, out_path):
    """Convert a grid between the binary and occ.json formats."""
    def go():
        save_grid(load_grid(in_path), out_path)
        click.echo(f"converted -> {out_path}")
    _run(go)


@main.command()
@click.option("--root", "root_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of project subdirectories.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8757)
@click.option("--rcon-host", default="127.0.0.1")
@click.option("--rcon-port", type=int, default=rcon_mod.DEFAULT_PORT)
@click.option("--rcon-password", default=None,
              help=f"RCON password (or ${PASSWORD_ENV}).")
def serve(root_dir, host, port, rcon_host, rcon_port, rcon_password):
    """Run the editor-backing HTTP service."""
    def go():
        import uvicorn
        from .service import create_app
        secret = rcon_password if rcon_password is not None \
            else os.environ.get(PASSWORD_ENV, "")
        app = create_app(Path(root_dir), rcon_host=rcon_host,
                         rcon_port=rcon_port, rcon_password=secret)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    _run(go)


if __name__ == "__main__":
    main()
