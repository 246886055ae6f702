"""End-to-end orchestration: fused grid -> centers -> matches -> plan,
plus the shared parameter set used by the CLI and the HTTP service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import centers as centers_mod
from . import templates as templates_mod
from .fusion import ViewObservation, fuse_views
from .grid import Aabb, ClassTable, SemanticGrid
from .plan import DEFAULT_BLOCK_TABLE, BuildPlan, PlanConfig, PlanDiagnostics, emit_plan
from .templates import NoTemplate, Template


@dataclass(frozen=True)
class PipelineConfig:
    kernel_size: int = 3
    tau: float = 0.2
    eta: float = 2.0
    min_pts: int = 1
    rotations: tuple = templates_mod.ROTATIONS
    crop_radius: int = 5
    min_iou: float = 0.25
    volume: tuple = (16, 16, 16)  # w, h, d
    epsilon: tuple = (0, 0, 0)
    structural_classes: tuple = (1, 2, 3, 4)
    block_table: dict = field(default_factory=lambda: dict(DEFAULT_BLOCK_TABLE))

    @staticmethod
    def from_json(path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text())
        return PipelineConfig().merged(data)

    def merged(self, overrides: dict) -> "PipelineConfig":
        known = {}
        for key, value in overrides.items():
            if value is None or not hasattr(self, key):
                continue
            if key in ("rotations", "volume", "epsilon", "structural_classes"):
                value = tuple(value)
            elif key == "block_table":
                value = {int(k): v for k, v in value.items()}
            known[key] = value
        return replace(self, **known)

    def plan_config(self) -> PlanConfig:
        return PlanConfig(structural_classes=self.structural_classes,
                          block_table=dict(self.block_table),
                          min_iou=self.min_iou)


def compute_centers(grid: SemanticGrid, config: PipelineConfig) -> centers_mod.CenterSet:
    binary = centers_mod.binarize(grid)
    density = centers_mod.density_map(binary, config.kernel_size)
    candidates = centers_mod.extract_candidates(grid, density, config.tau)
    return centers_mod.cluster_centroids(
        candidates, config.eta, config.min_pts,
        params={"k": config.kernel_size, "tau": config.tau,
                "eta": config.eta, "min_pts": config.min_pts})


def match_centers(grid: SemanticGrid, center_set: centers_mod.CenterSet,
                  library: list[Template], config: PipelineConfig):
    """Per-center template retrieval. Returns (enriched centers, matches);
    a None match means no template exists for that class (raw fallback)."""
    enriched = []
    matches = []
    for c in center_set.centers:
        crop = templates_mod.crop_instance(grid, c, config.crop_radius)
        members = tuple(sorted(crop.occupied)) or c.member_voxels
        enriched.append(replace(c, member_voxels=members,
                                members=len(members) or c.members))
        if not crop.occupied:
            matches.append(None)
            continue
        try:
            matches.append(templates_mod.best_match(
                crop, library, c.class_id, config.rotations))
        except NoTemplate:
            matches.append(None)
    enriched_set = centers_mod.CenterSet(tuple(enriched), center_set.params,
                                         center_set.noise_count)
    return enriched_set, matches


@dataclass
class ReconstructionReport:
    candidate_count: int = 0
    center_count: int = 0
    noise_count: int = 0
    fallback_count: int = 0
    conflict_count: int = 0
    command_count: int = 0


def reconstruct_scene(observations: list[ViewObservation], out_bounds: Aabb,
                      library: list[Template],
                      config: PipelineConfig = PipelineConfig()):
    """Fuse -> density/threshold -> cluster -> match -> emit, in order.

    Returns (plan, diagnostics, report).
    """
    fused = fuse_views(observations, out_bounds)
    center_set = compute_centers(fused, config)
    center_set, matches = match_centers(fused, center_set, library, config)
    plan, diags = emit_plan(fused, center_set, matches, library,
                            config.plan_config())
    report = ReconstructionReport(
        candidate_count=sum(c.members for c in center_set.centers),
        center_count=len(center_set.centers),
        noise_count=center_set.noise_count,
        fallback_count=len(diags.fallback_centers),
        conflict_count=len(diags.conflicts),
        command_count=len(plan.commands),
    )
    return plan, diags, report
