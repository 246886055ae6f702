"""Pinhole camera model: intrinsics from horizontal FOV, extrinsics from
position + yaw/pitch (pi-offset YX Euler convention), and world-to-pixel
projection.

Camera frame: +X right, +Y down, +Z forward. The extrinsic matrix maps
camera coordinates to world coordinates; projection applies its inverse.
All angles are radians internally; degree-valued pose logs are converted
at ingestion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class InvalidFov(Exception):
    pass


class BehindCamera(Exception):
    pass


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


def intrinsics_from_fov(fov_h: float, width: int, height: int) -> Intrinsics:
    """fx = fy = W / (2 tan(fov_h / 2)); principal point at the image center."""
    if not (0.0 < fov_h < math.pi):
        raise InvalidFov(f"horizontal fov must be in (0, pi), got {fov_h}")
    if width <= 0 or height <= 0:
        raise InvalidFov(f"image size must be positive, got {width}x{height}")
    # tan(a/2) = sin(a) / (1 + cos(a)): avoids the halving round-off and is
    # exact at the common 90-degree FOV.
    f = width * (1.0 + math.cos(fov_h)) / (2.0 * math.sin(fov_h))
    return Intrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0,
                      width=width, height=height)


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    yaw: float
    pitch: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (*self.position, self.yaw, self.pitch)):
            raise ValueError("pose values must be finite")
        # Wrap pitch into (-pi, pi], then clamp to [-pi/2, pi/2].
        phi = math.remainder(self.pitch, 2.0 * math.pi)
        phi = max(-math.pi / 2.0, min(math.pi / 2.0, phi))
        object.__setattr__(self, "pitch", phi)
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))


def rotation_from_yaw_pitch(yaw: float, pitch: float) -> np.ndarray:
    """Closed-form R = R_X(pitch+pi) @ R_Y(yaw+pi)."""
    st, ct = math.sin(yaw), math.cos(yaw)
    sp, cp = math.sin(pitch), math.cos(pitch)
    return np.array([
        [-ct, 0.0, -st],
        [st * sp, -cp, -ct * sp],
        [-st * cp, -sp, ct * cp],
    ])


@dataclass(frozen=True)
class Extrinsics:
    """Camera-to-world transform [[R, p], [0, 1]]."""

    rotation: np.ndarray   # 3x3
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def camera_to_world(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def world_to_camera(self, p) -> np.ndarray:
        return self.rotation.T @ (np.asarray(p, dtype=float) - self.translation)

    @staticmethod
    def identity() -> "Extrinsics":
        return Extrinsics(np.eye(3), np.zeros(3))


def extrinsics_from_pose(pose: Pose) -> Extrinsics:
    return Extrinsics(rotation_from_yaw_pitch(pose.yaw, pose.pitch),
                      np.asarray(pose.position, dtype=float))


def project(point, extrinsics: Extrinsics, intrinsics: Intrinsics):
    """Project a world point to pixel coordinates.

    Returns ((u, v), depth) where depth is the camera-frame forward (z)
    distance. Raises BehindCamera for depth <= 0.
    """
    pc = extrinsics.world_to_camera(point)
    depth = float(pc[2])
    if depth <= 0.0:
        raise BehindCamera(f"depth {depth} <= 0")
    u = intrinsics.fx * pc[0] / depth + intrinsics.cx
    v = intrinsics.fy * pc[1] / depth + intrinsics.cy
    return (float(u), float(v)), depth


def voxel_center(v) -> np.ndarray:
    """Sample point of an integer voxel: its center."""
    return np.asarray(v, dtype=float) + 0.5


@dataclass(frozen=True)
class FrameRecord:
    frame: str
    pose: Pose
    fov: float  # horizontal, radians


def load_poses(path) -> list[FrameRecord]:
    """Ingest poses.json: per-frame position, yaw/pitch/fov in degrees."""
    records = []
    for entry in json.loads(Path(path).read_text()):
        pose = Pose(position=tuple(float(c) for c in entry["pos"]),
                    yaw=math.radians(float(entry["yaw_deg"])),
                    pitch=math.radians(float(entry["pitch_deg"])))
        records.append(FrameRecord(frame=str(entry["frame"]), pose=pose,
                                   fov=math.radians(float(entry["fov_deg"]))))
    return records
