"""Path-aware time reallocation.

Frame counts are split across the three stages proportionally to arc
length (largest-remainder rounding, ties by stage order), then each stage
is resampled along its polyline so chord lengths follow the velocity
profile. Junction frames are shared: each junction is emitted once, owned
by the later stage, which is also where the gripper state flips.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from .errors import DegeneratePath, InsufficientFrames
from .grid_planner import Stage, Trajectory


class VelocityProfile(Enum):
    SINE = "sine"
    UNIFORM = "uniform"

    def cumulative(self, u: np.ndarray) -> np.ndarray:
        """Cumulative arc fraction s(u) on [0, 1]."""
        u = np.asarray(u, dtype=np.float64)
        if self is VelocityProfile.SINE:
            return 0.5 * (1.0 - np.cos(np.pi * u))
        return u


class GripperState(Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class TimedFrame:
    index: int
    position: np.ndarray  # (3,) world meters
    stage: Stage
    gripper: GripperState


@dataclass(frozen=True)
class TimedTrajectory:
    frames: Tuple[TimedFrame, ...]

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def positions(self) -> np.ndarray:
        return np.asarray([f.position for f in self.frames], dtype=np.float64)

    def speeds(self) -> np.ndarray:
        """Per-chord displacement magnitudes between consecutive frames."""
        p = self.positions()
        return np.linalg.norm(np.diff(p, axis=0), axis=1)

    def stage_slices(self) -> dict:
        out = {}
        for i, f in enumerate(self.frames):
            if f.stage not in out:
                out[f.stage] = [i, i]
            out[f.stage][1] = i
        return {k: (v[0], v[1] + 1) for k, v in out.items()}

    def grasp_frame(self) -> int:
        """First frame with the gripper closed."""
        for f in self.frames:
            if f.gripper is GripperState.CLOSED:
                return f.index
        return -1


def arc_length(points) -> float:
    """Polyline length; 0 for a single point."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(p) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


def allocate_counts(sub_lengths, total_frames: int) -> Tuple[int, int, int]:
    """Largest-remainder split of the frame budget by arc-length share."""
    lengths = np.asarray(sub_lengths, dtype=np.float64)
    if len(lengths) != 3 or np.any(lengths < 0) or not np.any(lengths > 0):
        raise ValueError(f"need 3 non-negative lengths with one positive: {sub_lengths}")
    total_frames = int(total_frames)
    if total_frames < 6:
        raise InsufficientFrames(f"need at least 6 frames, got {total_frames}")
    shares = lengths / lengths.sum() * total_frames
    counts = np.floor(shares).astype(int)
    remainders = shares - counts
    # ties broken by stage order: stable sort on -remainder
    order = np.argsort(-remainders, kind="stable")
    for k in range(total_frames - int(counts.sum())):
        counts[order[k % 3]] += 1
    if np.any(counts < 2):
        raise InsufficientFrames(
            f"stage shares {counts.tolist()} leave a stage under 2 frames"
        )
    return tuple(int(c) for c in counts)


def resample(points, count: int, profile: VelocityProfile) -> np.ndarray:
    """Reposition ``count`` points along the polyline at cumulative arc
    lengths L*s(k/(count-1)); endpoints are preserved exactly."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    count = int(count)
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0.0:
        raise DegeneratePath("cannot resample a zero-length path")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = total * profile.cumulative(np.arange(count) / (count - 1))
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    denom = np.where(seg[idx] > 0, seg[idx], 1.0)
    t = (targets - cum[idx]) / denom
    out = p[idx] + t[:, None] * (p[idx + 1] - p[idx])
    out[0] = p[0]
    out[-1] = p[-1]
    return out


_STAGE_GRIPPER = {
    Stage.APPROACH: GripperState.OPEN,
    Stage.MANIPULATE: GripperState.CLOSED,
    Stage.BACK_IDLE: GripperState.OPEN,
}


def reallocate(
    traj: Trajectory,
    total_frames: int = 49,
    profile: VelocityProfile = VelocityProfile.SINE,
) -> TimedTrajectory:
    """Allocate frames per stage and resample each stage with the profile.

    The approach/manipulate junction frame carries the manipulate stage
    (gripper closes there); the manipulate/back-idle junction frame
    carries the back-idle stage (gripper reopens there).
    """
    lengths = [arc_length(s.points) for s in traj.subs]
    n1, n2, n3 = allocate_counts(lengths, total_frames)
    # stage resample counts; the later stage owns each junction frame
    r1 = resample(traj.subs[0].points, n1 + 1, profile)[:-1]
    r2 = resample(traj.subs[1].points, n2 + 1, profile)[:-1]
    r3 = resample(traj.subs[2].points, n3, profile)
    frames: List[TimedFrame] = []
    for stage, pts in ((Stage.APPROACH, r1), (Stage.MANIPULATE, r2), (Stage.BACK_IDLE, r3)):
        for pos in pts:
            frames.append(
                TimedFrame(
                    index=len(frames),
                    position=np.array(pos),
                    stage=stage,
                    gripper=_STAGE_GRIPPER[stage],
                )
            )
    return TimedTrajectory(frames=tuple(frames))


def speed_profile_csv_rows(before: np.ndarray, after: np.ndarray):
    """Rows (frame, speed_before, speed_after) for plotting; ragged tails
    are left blank."""
    n = max(len(before), len(after))
    rows = []
    for k in range(n):
        rows.append(
            (
                k,
                repr(float(before[k])) if k < len(before) else "",
                repr(float(after[k])) if k < len(after) else "",
            )
        )
    return rows
