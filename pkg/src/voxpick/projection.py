"""Sphere abstraction, pinhole projection, and guidance-mask rendering.

The object and gripper are spheres; each frame they project to circles
(u, v, r_px) with r_px = fx * R / Z, the small-circle pinhole
approximation (error < 0.6% beyond Z = 10R). Masks are 8-bit label
images: 0 background, 128 object, 200 open gripper, 255 closed gripper;
the gripper overlays the object on overlap. Frame 0 stays all background
and carries a keep-first-frame flag for the downstream conditioning
consumer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch
from .time_alloc import GripperState, TimedTrajectory

PALETTE = {
    "background": 0,
    "object": 128,
    "gripper_open": 200,
    "gripper_closed": 255,
}

BEHIND = "behind"  # sentinel for spheres at or behind the image plane


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # (3, 3) world-to-camera
    translation: np.ndarray  # (3,) meters

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive: fx={self.fx} fy={self.fy}")
        if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-9:
            raise ValueError("rotation is not orthonormal")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def to_camera(self, p_world) -> np.ndarray:
        p = np.asarray(p_world, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def depth(self, p_world) -> np.ndarray:
        return self.to_camera(p_world)[..., 2]


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> Tuple[np.ndarray, np.ndarray]:
    """World-to-camera rotation/translation for a camera at ``eye``
    looking at ``target`` (camera +z forward, +y down)."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd])
    return R, -R @ eye


class ActorRole(Enum):
    OBJECT = "object"
    GRIPPER = "gripper"


@dataclass(frozen=True)
class SphereActor:
    role: ActorRole
    radius: float  # meters; object: longer bounding-box edge, gripper: fixed
    centers: np.ndarray  # (n_frames, 3) world meters

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"sphere radius must be positive: {self.radius}")
        c = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)


@dataclass(frozen=True)
class GuidanceMask:
    image: np.ndarray  # (height, width) uint8, palette values only
    keep_first_frame: bool = False

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.uint8)
        img.setflags(write=False)
        object.__setattr__(self, "image", img)


def project_sphere(cam: CameraModel, center, radius_m: float):
    """Project a world sphere to an image circle (u, v, r_px), or BEHIND
    when the camera-frame depth is not safely positive (Z <= radius)."""
    X, Y, Z = cam.to_camera(center)
    if Z <= radius_m:
        return BEHIND
    u = cam.fx * X / Z + cam.cx
    v = cam.fy * Y / Z + cam.cy
    r_px = cam.fx * radius_m / Z
    return float(u), float(v), float(r_px)


def unproject(cam: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    """Camera-frame point with image coords (u, v) at depth Z."""
    return np.array(
        [(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth]
    )


def object_depth_offset(cam: CameraModel, effector_frames, grasp_frame: int) -> np.ndarray:
    """Per-frame object camera-depth deltas under the constant
    camera-object distance assumption: zero before the grasp, afterwards
    equal to the effector's depth change relative to the grasp frame."""
    depths = cam.depth(np.asarray(effector_frames, dtype=np.float64))
    if not 0 <= grasp_frame < len(depths):
        raise ValueError(f"grasp frame {grasp_frame} outside 0..{len(depths) - 1}")
    deltas = np.zeros_like(depths)
    deltas[grasp_frame:] = depths[grasp_frame:] - depths[grasp_frame]
    return deltas


def rasterize_circle(mask: np.ndarray, circle, value: int) -> None:
    """Fill pixels whose centers fall inside the circle (in place)."""
    if circle == BEHIND:
        return
    u, v, r = circle
    h, w = mask.shape
    x = np.arange(w) + 0.5
    y = np.arange(h) + 0.5
    inside = (x[None, :] - u) ** 2 + (y[:, None] - v) ** 2 <= r * r
    mask[inside] = value


def render_guidance_masks(
    timed: TimedTrajectory,
    obj: SphereActor,
    gripper: SphereActor,
    cam: CameraModel,
) -> List[GuidanceMask]:
    """Per-frame label images: object circle first, gripper overlaid on
    top with the open/closed palette value; frame 0 all background with
    the keep flag set."""
    n = timed.n_frames
    if len(obj.centers) != n or len(gripper.centers) != n:
        raise DimensionMismatch(
            f"actor frames (object {len(obj.centers)}, gripper {len(gripper.centers)}) "
            f"!= trajectory frames ({n})"
        )
    masks: List[GuidanceMask] = []
    for k in range(n):
        img = np.zeros((cam.height, cam.width), dtype=np.uint8)
        if k == 0:
            masks.append(GuidanceMask(image=img, keep_first_frame=True))
            continue
        rasterize_circle(img, project_sphere(cam, obj.centers[k], obj.radius), PALETTE["object"])
        gval = (
            PALETTE["gripper_closed"]
            if timed.frames[k].gripper is GripperState.CLOSED
            else PALETTE["gripper_open"]
        )
        rasterize_circle(img, project_sphere(cam, gripper.centers[k], gripper.radius), gval)
        masks.append(GuidanceMask(image=img))
    return masks


def write_pgm(path, image: np.ndarray) -> None:
    """Binary PGM (P5), 8-bit."""
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise ValueError(f"{path}: not a binary 8-bit PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3][: w * h], dtype=np.uint8).reshape(h, w)
