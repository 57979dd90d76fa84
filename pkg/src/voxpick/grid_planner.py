"""Three-stage A* initialization on the occupancy grid.

Search runs under 26-connectivity with Euclidean edge costs and an
admissible straight-line heuristic. Obstacles are inflated by an integer
Chebyshev clearance before search so initial paths keep away from
surfaces; if inflation swallows a keypoint the search retries without
inflation and flags it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from math import sqrt
from typing import Optional, Tuple

import numpy as np

from .errors import GoalOccupied, NoPath, StartOccupied, VoxpickError, tag_stage
from .scene import OccupancyGrid, SceneSpec


class Stage(Enum):
    APPROACH = "approach"
    MANIPULATE = "manipulate"
    BACK_IDLE = "back_idle"


STAGE_ORDER = (Stage.APPROACH, Stage.MANIPULATE, Stage.BACK_IDLE)

# 26-neighborhood offsets with step lengths, in deterministic order
_NEIGHBORS = tuple(
    ((dx, dy, dz), sqrt(dx * dx + dy * dy + dz * dz))
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)


@dataclass(frozen=True)
class SubTrajectory:
    stage: Stage
    points: np.ndarray  # (n, 3) float64 world meters
    cost: float = 0.0  # grid path cost, meters
    clearance_used: int = 0  # inflation actually applied (0 after fallback)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Trajectory:
    subs: Tuple[SubTrajectory, SubTrajectory, SubTrajectory]

    def __post_init__(self):
        stages = tuple(s.stage for s in self.subs)
        if stages != STAGE_ORDER:
            raise ValueError(f"sub-trajectory stages must be {STAGE_ORDER}, got {stages}")
        for a, b in zip(self.subs[:-1], self.subs[1:]):
            if not np.array_equal(a.points[-1], b.points[0]):
                raise ValueError(
                    f"junction mismatch between {a.stage.value} and {b.stage.value}"
                )

    def waypoints(self) -> np.ndarray:
        """Concatenated path with shared junction points emitted once."""
        return np.concatenate(
            [self.subs[0].points] + [s.points[1:] for s in self.subs[1:]], axis=0
        )


def dilate_chebyshev(occ: np.ndarray, clearance: int) -> np.ndarray:
    """Inflate occupancy by a Chebyshev ball of radius ``clearance``
    (separable 1D max along each axis)."""
    if clearance <= 0:
        return occ
    out = occ
    for axis in range(3):
        acc = out.copy()
        for shift in range(1, clearance + 1):
            lead = np.zeros_like(out)
            trail = np.zeros_like(out)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            src[axis] = slice(shift, None)
            dst[axis] = slice(None, -shift)
            lead[tuple(dst)] = out[tuple(src)]
            trail[tuple(src)] = out[tuple(dst)]
            acc |= lead | trail
        out = acc
    return out


def _reconstruct(came_from, cell):
    path = [cell]
    while cell in came_from:
        cell = came_from[cell]
        path.append(cell)
    path.reverse()
    return path


def _astar_cells(free: np.ndarray, start, goal):
    """Deterministic A* over the free mask; returns the cell path.

    Tie-breaking on the open heap: lower f, then lower h, then
    lexicographic cell order.
    """
    dims = free.shape
    goal_v = np.asarray(goal, dtype=np.float64)

    def h(cell):
        d = goal_v - cell
        return sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])

    start = tuple(int(v) for v in start)
    goal = tuple(int(v) for v in goal)
    if start == goal:
        return [start], 0.0

    g = {start: 0.0}
    came_from = {}
    h0 = h(np.asarray(start))
    heap = [(h0, h0, start)]
    closed = set()
    while heap:
        f, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        if cell == goal:
            return _reconstruct(came_from, cell), g[cell]
        closed.add(cell)
        gc = g[cell]
        for (dx, dy, dz), step in _NEIGHBORS:
            nb = (cell[0] + dx, cell[1] + dy, cell[2] + dz)
            if not (0 <= nb[0] < dims[0] and 0 <= nb[1] < dims[1] and 0 <= nb[2] < dims[2]):
                continue
            if not free[nb] or nb in closed:
                continue
            ng = gc + step
            if ng < g.get(nb, np.inf):
                g[nb] = ng
                came_from[nb] = cell
                hn = h(np.asarray(nb))
                heapq.heappush(heap, (ng + hn, hn, nb))
    return None, np.inf


def plan_segment(
    grid: OccupancyGrid,
    start,
    goal,
    clearance_voxels: int = 1,
    stage: Stage = Stage.APPROACH,
) -> SubTrajectory:
    """Minimal-cost 26-connected path between two cells, as voxel centers."""
    start = tuple(int(v) for v in start)
    goal = tuple(int(v) for v in goal)
    if not grid.is_free(start):
        raise StartOccupied(f"start cell {start} is occupied")
    if not grid.is_free(goal):
        raise GoalOccupied(f"goal cell {goal} is occupied")

    clearance = int(clearance_voxels)
    free = ~dilate_chebyshev(grid.occupied, clearance)
    if clearance > 0 and (not free[start] or not free[goal]):
        clearance = 0
        free = ~grid.occupied
    cells, cost = _astar_cells(free, start, goal)
    if cells is None:
        raise NoPath(f"no path from {start} to {goal} at clearance {clearance}")
    points = np.asarray([grid.grid_to_world(c) for c in cells], dtype=np.float64)
    return SubTrajectory(
        stage=stage, points=points, cost=float(cost * grid.voxel_size), clearance_used=clearance
    )


def plan_three_stage(
    grid: OccupancyGrid,
    effector,
    obj,
    target,
    clearance_voxels: int = 1,
    grasp_offset=None,
) -> Trajectory:
    """Initial trajectory: approach (effector -> grasp point), manipulate
    (grasp point -> target), back-idle (target -> effector).

    Keypoints are snapped to voxel centers for search; the exact world
    keypoints replace the first/last point of each stage afterwards.
    A grasp offset, when given, shifts the grasp point off the object
    center (affordance control).
    """
    effector = np.asarray(effector, dtype=np.float64)
    obj = np.asarray(obj, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    grasp = obj if grasp_offset is None else obj + np.asarray(grasp_offset, dtype=np.float64)

    cells = {}
    for name, p in (("effector", effector), ("grasp", grasp), ("target", target)):
        cells[name] = grid.world_to_grid(p)

    legs = (
        (Stage.APPROACH, cells["effector"], cells["grasp"], effector, grasp),
        (Stage.MANIPULATE, cells["grasp"], cells["target"], grasp, target),
        (Stage.BACK_IDLE, cells["target"], cells["effector"], target, effector),
    )
    subs = []
    for stage, c0, c1, p0, p1 in legs:
        try:
            sub = plan_segment(grid, c0, c1, clearance_voxels, stage=stage)
        except VoxpickError as e:
            raise tag_stage(type(e)(f"{stage.value}: {e}"), "plan") from e
        pts = np.array(sub.points)
        if len(pts) == 1 and not np.array_equal(p0, p1):
            pts = np.stack([p0, p1])  # distinct keypoints sharing one cell
        else:
            pts[0] = p0
            pts[-1] = p1
        subs.append(
            SubTrajectory(
                stage=stage, points=pts, cost=sub.cost, clearance_used=sub.clearance_used
            )
        )
    return Trajectory(subs=tuple(subs))
