"""First-order refinement of the initial trajectory.

Each sub-trajectory descends the weighted objective
w_len*L_len + w_acc*L_acc + w_curv*L_curv + w_col*L_col with Adam; the
first and last waypoint of every sub-trajectory stay frozen.

Iterate selection prefers feasibility: among all iterates seen (including
the input), a collision-free one (L_col = 0, i.e. every waypoint at least
d_safe from matter) with the lowest objective wins over any violating
iterate — a smoother path that cuts into the safety margin is not a
better plan. If no iterate is collision-free, the lowest-objective one is
returned. Either way the reported objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .distance_field import DistanceField
from .errors import NonFiniteLoss
from .grid_planner import SubTrajectory, Trajectory
from .losses import loss_acc, loss_col, loss_curv, loss_length


@dataclass(frozen=True)
class PlannerConfig:
    w_len: float = 1.0
    w_acc: float = 1.0
    w_curv: float = 0.1
    w_col: float = 10.0
    d_safe: float = 0.02  # meters; scenarios default to 2 * voxel_size
    learning_rate: float = 0.1
    iterations: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    eps_curv: float = 1e-6
    clearance_voxels: int = 1

    def __post_init__(self):
        weights = (self.w_len, self.w_acc, self.w_curv, self.w_col)
        if any(w < 0 or not np.isfinite(w) for w in weights):
            raise ValueError(f"loss weights must be finite and non-negative: {weights}")
        if not any(w > 0 for w in weights):
            raise ValueError("at least one loss weight must be positive")
        if self.d_safe < 0 or not np.isfinite(self.d_safe):
            raise ValueError(f"d_safe must be a non-negative finite scalar: {self.d_safe}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be positive: {self.iterations}")


@dataclass
class LossTerms:
    col: float
    length: float
    acc: float
    curv: float
    total: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "col": self.col,
            "len": self.length,
            "acc": self.acc,
            "curv": self.curv,
            "total": self.total,
        }


@dataclass
class LossReport:
    before: LossTerms
    after: LossTerms
    per_stage_before: Dict[str, LossTerms]
    per_stage_after: Dict[str, LossTerms]
    trace: Optional[Dict[str, List[float]]] = None  # per-iteration totals

    def as_dict(self) -> dict:
        out = {
            "before": self.before.as_dict(),
            "after": self.after.as_dict(),
            "per_stage_before": {k: v.as_dict() for k, v in self.per_stage_before.items()},
            "per_stage_after": {k: v.as_dict() for k, v in self.per_stage_after.items()},
        }
        if self.trace is not None:
            out["trace"] = self.trace
        return out


def evaluate_losses(
    P: np.ndarray, field: DistanceField, config: PlannerConfig
) -> Tuple[LossTerms, np.ndarray]:
    """Weighted objective and its gradient over one waypoint array."""
    v_col, g_col = loss_col(P, field, config.d_safe)
    v_len, g_len = loss_length(P)
    v_acc, g_acc = loss_acc(P)
    v_curv, g_curv = loss_curv(P, config.eps_curv)
    total = (
        config.w_col * v_col
        + config.w_len * v_len
        + config.w_acc * v_acc
        + config.w_curv * v_curv
    )
    grad = (
        config.w_col * g_col
        + config.w_len * g_len
        + config.w_acc * g_acc
        + config.w_curv * g_curv
    )
    return LossTerms(col=v_col, length=v_len, acc=v_acc, curv=v_curv, total=total), grad


def _optimize_points(
    P0: np.ndarray, field: DistanceField, config: PlannerConfig
) -> Tuple[np.ndarray, LossTerms, LossTerms, List[float]]:
    """Adam descent with frozen endpoints; returns the best iterate,
    preferring collision-free ones (see module docstring)."""
    P = np.array(P0, dtype=np.float64)
    terms0, _ = evaluate_losses(P, field, config)
    if not np.isfinite(terms0.total):
        raise NonFiniteLoss("initial objective is non-finite", iteration=0)
    if len(P) <= 2:
        return P, terms0, terms0, [terms0.total]

    m = np.zeros_like(P)
    v = np.zeros_like(P)
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    best = {True: None, False: None}  # keyed by feasibility (L_col == 0)

    def consider(terms: LossTerms, points: np.ndarray) -> None:
        feasible = terms.col == 0.0
        cur = best[feasible]
        if cur is None or terms.total < cur[0].total:
            best[feasible] = (terms, points.copy())

    consider(terms0, P)
    trace = [terms0.total]
    for t in range(1, config.iterations + 1):
        terms, grad = evaluate_losses(P, field, config)
        if not np.isfinite(terms.total) or not np.isfinite(grad).all():
            raise NonFiniteLoss("objective became non-finite", iteration=t)
        consider(terms, P)
        trace.append(terms.total)
        grad[0] = 0.0
        grad[-1] = 0.0
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        P = P - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

    terms, _ = evaluate_losses(P, field, config)
    if not np.isfinite(terms.total):
        raise NonFiniteLoss("objective became non-finite", iteration=config.iterations)
    consider(terms, P)
    trace.append(terms.total)

    pick = best[True]
    if pick is None or pick[0].total > terms0.total:
        # no collision-free iterate improved on the input: fall back to
        # the lowest objective seen overall (the input is a candidate)
        pick = min(
            (b for b in best.values() if b is not None), key=lambda b: b[0].total
        )
    best_terms, best_P = pick
    return best_P, terms0, best_terms, trace


def optimize_trajectory(
    traj: Trajectory,
    field: DistanceField,
    config: PlannerConfig,
    keep_trace: bool = False,
) -> Tuple[Trajectory, LossReport]:
    """Optimize the three sub-trajectories independently.

    Endpoints of each sub-trajectory are returned bit-identical to the
    input, so the stage junctions stay pinned to the scenario keypoints.
    """
    subs = []
    per_before: Dict[str, LossTerms] = {}
    per_after: Dict[str, LossTerms] = {}
    trace: Dict[str, List[float]] = {}
    for sub in traj.subs:
        P, terms0, terms1, tr = _optimize_points(sub.points, field, config)
        P = np.array(P)
        P[0] = sub.points[0]
        P[-1] = sub.points[-1]
        subs.append(replace(sub, points=P))
        per_before[sub.stage.value] = terms0
        per_after[sub.stage.value] = terms1
        trace[sub.stage.value] = tr

    def _sum(parts: Dict[str, LossTerms]) -> LossTerms:
        return LossTerms(
            col=sum(p.col for p in parts.values()),
            length=sum(p.length for p in parts.values()),
            acc=sum(p.acc for p in parts.values()),
            curv=sum(p.curv for p in parts.values()),
            total=sum(p.total for p in parts.values()),
        )

    report = LossReport(
        before=_sum(per_before),
        after=_sum(per_after),
        per_stage_before=per_before,
        per_stage_after=per_after,
        trace=trace if keep_trace else None,
    )
    return Trajectory(subs=tuple(subs)), report
