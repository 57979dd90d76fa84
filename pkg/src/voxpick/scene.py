"""Scene ingestion: point clouds, synthetic primitives, and voxelization.

World coordinates are meters. Voxel cells are half-open boxes
``[min + i*s, min + (i+1)*s)`` so every in-bounds point lands in exactly
one cell; cell centers sit at ``min + (i + 0.5)*s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DegenerateBounds,
    IoError,
    KeypointOccupied,
    OutOfBounds,
    ParseError,
)

Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (n, 3) float64, world meters

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.size and not np.isfinite(pts).all():
            raise ParseError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class GridBounds:
    min_corner: Vec3
    voxel_size: float  # meters

    def __post_init__(self):
        if not (self.voxel_size > 0 and np.isfinite(self.voxel_size)):
            raise DegenerateBounds(f"voxel_size must be positive, got {self.voxel_size}")
        object.__setattr__(self, "min_corner", tuple(float(c) for c in self.min_corner))


@dataclass(frozen=True)
class OccupancyGrid:
    dims: Tuple[int, int, int]
    bounds: GridBounds
    occupied: np.ndarray  # (nx, ny, nz) bool

    def __post_init__(self):
        occ = np.asarray(self.occupied, dtype=bool)
        if occ.shape != tuple(self.dims):
            raise DegenerateBounds(f"occupancy shape {occ.shape} != dims {self.dims}")
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def voxel_size(self) -> float:
        return self.bounds.voxel_size

    @property
    def min_corner(self) -> np.ndarray:
        return np.asarray(self.bounds.min_corner, dtype=np.float64)

    def world_to_grid(self, p) -> Tuple[int, int, int]:
        """Cell index of the half-open cell containing world point ``p``."""
        q = (np.asarray(p, dtype=np.float64) - self.min_corner) / self.voxel_size
        c = np.floor(q).astype(np.int64)
        if np.any(c < 0) or np.any(c >= np.asarray(self.dims)):
            raise OutOfBounds(f"point {tuple(np.asarray(p, float))} outside grid")
        return tuple(int(v) for v in c)

    def grid_to_world(self, cell) -> np.ndarray:
        """World-space center of cell ``cell``."""
        c = np.asarray(cell, dtype=np.int64)
        if np.any(c < 0) or np.any(c >= np.asarray(self.dims)):
            raise OutOfBounds(f"cell {tuple(int(v) for v in c)} out of range {self.dims}")
        return self.min_corner + (c + 0.5) * self.voxel_size

    def is_free(self, cell) -> bool:
        return not bool(self.occupied[tuple(int(v) for v in cell)])


# --- synthetic primitives -------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box occupying [min_m, max_m]."""

    min_m: Vec3
    max_m: Vec3
    name: str = "box"

    def contains(self, p: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.min_m)
        hi = np.asarray(self.max_m)
        return np.all((p >= lo) & (p <= hi), axis=-1)


@dataclass(frozen=True)
class Sphere:
    center_m: Vec3
    radius_m: float
    name: str = "sphere"

    def contains(self, p: np.ndarray) -> np.ndarray:
        d = p - np.asarray(self.center_m)
        return np.einsum("...k,...k->...", d, d) <= self.radius_m**2


@dataclass(frozen=True)
class Plane:
    """Half-space along one axis: occupied where coord <= offset (side
    "below") or coord >= offset (side "above")."""

    axis: int  # 0, 1, 2
    offset_m: float
    side: str = "below"
    name: str = "plane"

    def contains(self, p: np.ndarray) -> np.ndarray:
        coord = p[..., self.axis]
        return coord <= self.offset_m if self.side == "below" else coord >= self.offset_m


Primitive = Union[Box, Sphere, Plane]


@dataclass(frozen=True)
class SceneSpec:
    primitives: Tuple[Primitive, ...]
    effector_start: Vec3
    object_position: Vec3
    place_target: Vec3
    grasp_offset: Optional[Vec3] = None  # affordance point relative to object center

    def keypoints(self):
        return (
            np.asarray(self.effector_start, float),
            np.asarray(self.object_position, float),
            np.asarray(self.place_target, float),
        )

    def grasp_point(self) -> np.ndarray:
        obj = np.asarray(self.object_position, float)
        if self.grasp_offset is None:
            return obj
        return obj + np.asarray(self.grasp_offset, float)


# --- operations -----------------------------------------------------------


def load_point_cloud(path) -> PointCloud:
    """Read an ASCII XYZ ("x y z" per line) or ASCII PLY point cloud."""
    try:
        with open(path, "r", encoding="ascii", errors="strict") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not ASCII: {e}") from e

    if lines and lines[0].strip() == "ply":
        return _parse_ply(lines, path)
    return _parse_xyz(lines, path)


def _parse_xyz(lines, path) -> PointCloud:
    pts = []
    for ln, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) < 3:
            raise ParseError(f"{path}:{ln}: expected 3 coordinates, got {len(parts)}")
        try:
            xyz = [float(v) for v in parts[:3]]
        except ValueError as e:
            raise ParseError(f"{path}:{ln}: {e}") from e
        if not all(np.isfinite(xyz)):
            raise ParseError(f"{path}:{ln}: non-finite coordinate")
        pts.append(xyz)
    return PointCloud(np.asarray(pts, dtype=np.float64).reshape(-1, 3))


def _parse_ply(lines, path) -> PointCloud:
    n_vertices = None
    props = []
    header_end = None
    in_vertex_element = False
    for ln, line in enumerate(lines, start=1):
        s = line.strip()
        if ln == 2 and not s.startswith("format ascii"):
            raise ParseError(f"{path}:{ln}: only ASCII PLY is supported")
        if s.startswith("element"):
            parts = s.split()
            in_vertex_element = len(parts) == 3 and parts[1] == "vertex"
            if in_vertex_element:
                n_vertices = int(parts[2])
        elif s.startswith("property") and in_vertex_element:
            props.append(s.split()[-1])
        elif s == "end_header":
            header_end = ln
            break
    if header_end is None or n_vertices is None:
        raise ParseError(f"{path}: PLY header missing vertex element or end_header")
    try:
        ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
    except ValueError:
        raise ParseError(f"{path}: PLY vertex element lacks x/y/z properties")

    pts = []
    for ln in range(header_end + 1, header_end + 1 + n_vertices):
        if ln > len(lines):
            raise ParseError(f"{path}:{ln}: expected {n_vertices} vertices, file truncated")
        parts = lines[ln - 1].split()
        try:
            pts.append([float(parts[ix]), float(parts[iy]), float(parts[iz])])
        except (IndexError, ValueError) as e:
            raise ParseError(f"{path}:{ln}: bad vertex line: {e}") from e
    return PointCloud(np.asarray(pts, dtype=np.float64).reshape(-1, 3))


def write_xyz(path, cloud: PointCloud) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def default_bounds(cloud: PointCloud, dims) -> GridBounds:
    """Axis-aligned bounds of the cloud inflated by one voxel on each side."""
    if len(cloud) == 0:
        return GridBounds((0.0, 0.0, 0.0), 1.0 / max(dims))
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    extent = float((hi - lo).max())
    if extent <= 0:
        extent = 1.0
    # one-voxel inflation: extent spans dims-2 voxels of the final grid
    voxel = extent / (max(dims) - 2)
    return GridBounds(tuple(lo - voxel), voxel)


def voxelize(cloud: PointCloud, dims, bounds: GridBounds):
    """Bin points into a boolean grid.

    Returns (grid, n_outside): a voxel is occupied iff at least one point
    falls in its half-open cell; points outside the grid extent are only
    counted.
    """
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise DegenerateBounds(f"dims must be positive, got {dims}")
    occ = np.zeros(dims, dtype=bool)
    if len(cloud) == 0:
        return OccupancyGrid(dims, bounds, occ), 0
    q = (cloud.points - np.asarray(bounds.min_corner)) / bounds.voxel_size
    idx = np.floor(q).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < np.asarray(dims)), axis=1)
    occ[idx[inside, 0], idx[inside, 1], idx[inside, 2]] = True
    return OccupancyGrid(dims, bounds, occ), int((~inside).sum())


def synth_scene(spec: SceneSpec, dims, bounds: GridBounds) -> OccupancyGrid:
    """Voxelize parametric primitives: a voxel is occupied iff its center
    lies inside any primitive."""
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise DegenerateBounds(f"dims must be positive, got {dims}")
    axes = [
        np.asarray(bounds.min_corner)[k] + (np.arange(dims[k]) + 0.5) * bounds.voxel_size
        for k in range(3)
    ]
    cx, cy, cz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([cx, cy, cz], axis=-1)
    occ = np.zeros(dims, dtype=bool)
    for prim in spec.primitives:
        occ |= prim.contains(centers)
    grid = OccupancyGrid(dims, bounds, occ)
    for name, p in (
        ("effector start", spec.effector_start),
        ("object", spec.object_position),
        ("place target", spec.place_target),
    ):
        cell = grid.world_to_grid(p)
        if not grid.is_free(cell):
            raise KeypointOccupied(f"{name} at {tuple(p)} lands in occupied cell {cell}")
    return grid
