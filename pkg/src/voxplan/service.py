"""Local HTTP/JSON service backing the center editor.

Serves fused grids read-only, versions center edits with optimistic
revision numbers, regenerates plans on demand, and dispatches plans over
RCON as a background job per project. Projects are subdirectories of a
root directory, each holding a fused grid (``fused.vxg`` or ``occ.json``)
plus optional ``centers.json``, ``templates.json``, and ``config.json``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from fastapi import Body, FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from . import rcon as rcon_mod
from .centers import Center, CenterSet, save_centers
from .grid import EMPTY_ID, SemanticGrid, UnknownClass, load_grid
from .pipeline import PipelineConfig, compute_centers, match_centers
from .plan import SetBlock, emit_plan, render_commands, save_plan
from .templates import Template, load_templates

GRID_FILENAMES = ("fused.vxg", "occ.json")


@dataclass
class DispatchStatus:
    state: str = "idle"  # idle | running | done | failed | aborted
    sent: int = 0
    total: int = 0
    failed: int = 0
    error: str = ""

    def to_json(self):
        return {"state": self.state, "sent": self.sent,
                "total": self.total, "failed": self.failed,
                "error": self.error}


@dataclass
class Project:
    id: str
    directory: Path
    grid: SemanticGrid
    centers: CenterSet
    library: list
    config: PipelineConfig
    revision: int = 1
    patches: list = field(default_factory=list)
    plan: object = None
    plan_revision: int | None = None
    status: DispatchStatus = field(default_factory=DispatchStatus)
    lock: threading.Lock = field(default_factory=threading.Lock)
    dispatch_thread: threading.Thread | None = None


def _load_project(project_id: str, directory: Path) -> Project:
    grid_path = next((directory / n for n in GRID_FILENAMES
                      if (directory / n).exists()), None)
    if grid_path is None:
        raise FileNotFoundError(f"no grid file in {directory}")
    grid = load_grid(grid_path)
    config = PipelineConfig()
    if (directory / "config.json").exists():
        config = PipelineConfig.from_json(directory / "config.json")
    library: list[Template] = []
    if (directory / "templates.json").exists():
        library = load_templates(directory / "templates.json")
    if (directory / "centers.json").exists():
        from .centers import load_centers
        centers = load_centers(directory / "centers.json", grid.class_table)
    else:
        centers = compute_centers(grid, config)
    return Project(project_id, directory, grid, centers, library, config)


def _centers_json(project: Project):
    table = project.grid.class_table
    return [{"id": c.id, "class": table.names[c.class_id],
             "pos": [float(v) for v in c.centroid], "members": c.members}
            for c in project.centers.centers]


def _parse_centers(payload, project: Project) -> tuple[CenterSet, list]:
    """Validate and convert a PUT body; raises ValueError on bad schema."""
    if not isinstance(payload, dict) or not isinstance(payload.get("centers"), list):
        raise ValueError("body must be an object with a 'centers' list")
    table = project.grid.class_table
    centers = []
    seen_ids = set()
    for e in payload["centers"]:
        if not isinstance(e, dict):
            raise ValueError("each center must be an object")
        try:
            cid = int(e["id"])
            class_id = table.id_of(str(e["class"]))
            pos = tuple(float(v) for v in e["pos"])
            members = int(e.get("members", 1))
        except (KeyError, TypeError, ValueError, UnknownClass) as exc:
            raise ValueError(f"malformed center entry: {exc}") from exc
        if len(pos) != 3:
            raise ValueError("center pos must have 3 components")
        if cid in seen_ids:
            raise ValueError(f"duplicate center id {cid}")
        seen_ids.add(cid)
        centers.append(Center(cid, class_id, pos, members))
    patches = payload.get("patches", [])
    if not isinstance(patches, list):
        raise ValueError("'patches' must be a list")
    for p in patches:
        if not (isinstance(p, dict) and isinstance(p.get("block"), str)
                and isinstance(p.get("pos"), list) and len(p["pos"]) == 3):
            raise ValueError("each patch needs pos [x,y,z] and block name")
    return CenterSet(tuple(centers), project.centers.params), patches


def create_app(root: Path, rcon_host: str = "127.0.0.1",
               rcon_port: int = rcon_mod.DEFAULT_PORT,
               rcon_password: str = "") -> FastAPI:
    root = Path(root)
    app = FastAPI(title="voxplan service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    projects: dict[str, Project] = {}
    registry_lock = threading.Lock()

    def get_project(project_id: str) -> Project:
        with registry_lock:
            if project_id not in projects:
                directory = root / project_id
                if not directory.is_dir():
                    raise HTTPException(404, f"unknown project {project_id!r}")
                try:
                    projects[project_id] = _load_project(project_id, directory)
                except FileNotFoundError as e:
                    raise HTTPException(404, str(e))
            return projects[project_id]

    @app.get("/projects")
    def list_projects():
        ids = sorted(d.name for d in root.iterdir() if d.is_dir()
                     and any((d / n).exists() for n in GRID_FILENAMES))
        return {"projects": ids}

    @app.get("/projects/{project_id}/occ")
    def get_occ(project_id: str, stride: int = Query(1, ge=1)):
        p = get_project(project_id)
        g = p.grid
        labels = g.labels[::stride, ::stride, ::stride]
        voxels = []
        for (x, y, z) in np.argwhere(labels != EMPTY_ID):
            voxels.append([int(x * stride), int(y * stride), int(z * stride),
                           int(labels[x, y, z])])
        return {"dims": list(g.dims), "origin": list(g.origin),
                "classes": list(g.class_table.names),
                "stride": stride, "voxels": voxels}

    @app.get("/projects/{project_id}/centers")
    def get_centers(project_id: str):
        p = get_project(project_id)
        with p.lock:
            return {"revision": p.revision, "centers": _centers_json(p)}

    @app.put("/projects/{project_id}/centers")
    def put_centers(project_id: str, payload: dict = Body(...),
                    if_match: str | None = Header(None)):
        p = get_project(project_id)
        if if_match is None:
            raise HTTPException(428, "If-Match header with the current "
                                     "revision is required")
        try:
            expected = int(if_match)
        except ValueError:
            raise HTTPException(400, f"malformed If-Match {if_match!r}")
        try:
            centers, patches = _parse_centers(payload, p)
        except ValueError as e:
            raise HTTPException(422, str(e))
        with p.lock:
            if expected != p.revision:
                raise HTTPException(
                    409, f"revision conflict: expected {p.revision}, "
                         f"got {expected}")
            p.centers = centers
            p.patches = patches
            p.revision += 1
            save_centers(centers, p.grid.class_table,
                         p.directory / "centers.json")
            return {"revision": p.revision}

    @app.post("/projects/{project_id}/plan")
    def post_plan(project_id: str):
        p = get_project(project_id)
        with p.lock:
            enriched, matches = match_centers(p.grid, p.centers, p.library,
                                              p.config)
            plan, diags = emit_plan(p.grid, enriched, matches, p.library,
                                    p.config.plan_config())
            if p.patches:
                extra = tuple(SetBlock(tuple(int(v) for v in e["pos"]),
                                       e["block"]) for e in p.patches)
                plan = replace(plan, commands=plan.commands + extra)
            p.plan = plan
            p.plan_revision = p.revision
            save_plan(plan, p.directory / "plan.json")
            return {"revision": p.revision,
                    "command_count": len(plan.commands),
                    "conflicts": len(diags.conflicts),
                    "fallbacks": len(diags.fallback_centers),
                    "clipped": diags.clipped}

    @app.post("/projects/{project_id}/apply")
    def post_apply(project_id: str, payload: dict = Body(default={})):
        p = get_project(project_id)
        dry_run = bool(payload.get("dry_run", False))
        throttle = float(payload.get("throttle", 20.0))
        with p.lock:
            if p.plan is None:
                raise HTTPException(409, "no plan generated yet")
            plan = p.plan
        lines = render_commands(plan, "vanilla")
        if dry_run:
            return {"dry_run": True, "commands": lines}
        if p.dispatch_thread is not None and p.dispatch_thread.is_alive():
            raise HTTPException(409, "dispatch already running")
        try:
            session = rcon_mod.connect_and_auth(rcon_host, rcon_port,
                                                rcon_password)
        except rcon_mod.RconError as e:
            raise HTTPException(502, f"RCON connection failed: {e}")
        p.status = DispatchStatus(state="running", total=len(lines))

        def progress(report):
            p.status.sent = report.sent
            p.status.failed = report.failed

        def run():
            try:
                report = rcon_mod.apply_plan(session, plan, throttle=throttle,
                                             progress=progress)
                p.status.sent = report.sent
                p.status.failed = report.failed
                p.status.state = "aborted" if report.aborted else "done"
            except rcon_mod.RconError as e:
                p.status.state = "failed"
                p.status.error = str(e)
            finally:
                session.close()

        p.dispatch_thread = threading.Thread(target=run, daemon=True)
        p.dispatch_thread.start()
        return {"dry_run": False, "total": len(lines)}

    @app.get("/projects/{project_id}/status")
    def get_status(project_id: str):
        p = get_project(project_id)
        return p.status.to_json()

    return app
