"""Command-line front end.

Subcommands: ``synth`` writes a scenario file from a template, ``plan``
executes the full pipeline into a run-bundle directory, ``report``
summarizes a bundle as tables/CSV, ``masks`` re-renders guidance masks
from a bundle, and ``check`` runs the oracle self-test harness.

Exit codes: 0 ok, 2 parse/input, 3 no path, 4 optimizer non-finite,
5 render, 6 oracle mismatch. Every failure line starts with
``error:<stage>:<code>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from .errors import CorruptBundle, OracleMismatch, ParseError, VoxpickError
from .grid_planner import Stage
from .optimizer import PlannerConfig
from .pipeline import (
    Scenario,
    actor_frames,
    load_scenario,
    run,
    save_scenario,
    scenario_to_dict,
    write_bundle,
)
from .projection import ActorRole, SphereActor, render_guidance_masks, write_pgm
from .scene import Box
from .selfcheck import run_checks
from .templates import VOXEL, make_template
from .time_alloc import GripperState, TimedFrame, TimedTrajectory, VelocityProfile


def _add_config_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--w-len", type=float, default=None, help="length loss weight")
    p.add_argument("--w-acc", type=float, default=None, help="acceleration loss weight")
    p.add_argument("--w-curv", type=float, default=None, help="curvature loss weight")
    p.add_argument("--w-col", type=float, default=None, help="collision loss weight")
    p.add_argument("--d-safe", type=float, default=None, help="safe clearance, meters")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--frames", type=int, default=None, help="total timed frames")
    p.add_argument(
        "--profile", choices=[v.value for v in VelocityProfile], default=None
    )


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    cfg_fields = {
        "w_len": args.w_len,
        "w_acc": args.w_acc,
        "w_curv": args.w_curv,
        "w_col": args.w_col,
        "d_safe": args.d_safe,
        "learning_rate": args.learning_rate,
        "iterations": args.iterations,
    }
    overrides = {k: v for k, v in cfg_fields.items() if v is not None}
    changes = {}
    if overrides:
        try:
            changes["config"] = replace(scenario.config, **overrides)
        except ValueError as e:
            raise ParseError(f"bad planner override: {e}") from e
    if args.frames is not None:
        changes["total_frames"] = args.frames
    if args.profile is not None:
        changes["profile"] = VelocityProfile(args.profile)
    return replace(scenario, **changes) if changes else scenario


def _random_clutter(scenario: Scenario, count: int, seed: int) -> Scenario:
    """Sprinkle small random boxes that avoid a margin around keypoints."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(scenario.bounds.min_corner)
    extent = np.asarray(scenario.dims) * scenario.bounds.voxel_size
    keypoints = np.asarray(
        [
            scenario.spec.effector_start,
            scenario.spec.object_position,
            scenario.spec.place_target,
        ]
    )
    margin = 6.0 * scenario.bounds.voxel_size
    boxes = []
    attempts = 0
    while len(boxes) < count and attempts < 200 * max(count, 1):
        attempts += 1
        size = rng.uniform(2.0, 4.0, size=3) * scenario.bounds.voxel_size
        corner = lo + rng.uniform(0.0, 1.0, size=3) * (extent - size)
        center = corner + size / 2.0
        if np.any(np.linalg.norm(keypoints - center, axis=1) < margin):
            continue
        boxes.append(Box(tuple(corner), tuple(corner + size), name=f"clutter_{len(boxes)}"))
    spec = replace(scenario.spec, primitives=scenario.spec.primitives + tuple(boxes))
    return replace(scenario, spec=spec)


def cmd_synth(args) -> int:
    grasp_offset = tuple(args.grasp_offset) if args.grasp_offset else None
    scenario = make_template(args.template, grasp_offset=grasp_offset)
    scenario = _apply_overrides(scenario, args)
    if args.clutter:
        scenario = _random_clutter(scenario, args.clutter, args.seed)
    save_scenario(scenario, args.out)
    print(f"wrote scenario {scenario.name!r} -> {args.out}")
    return 0


def cmd_plan(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    bundle = run(scenario)
    write_bundle(bundle, args.out)
    rep = bundle.loss_report
    print(f"bundle -> {args.out}")
    print(
        f"objective {rep.before.total:.6f} -> {rep.after.total:.6f}; "
        f"min clearance (manipulate) "
        f"{bundle.clearance_before['manipulate'].min_m:.4f} -> "
        f"{bundle.clearance_after['manipulate'].min_m:.4f} m"
    )
    return 0


# --- report -----------------------------------------------------------------

LOSS_COLUMNS = ("col", "len", "acc", "curv", "total")
CLEARANCE_COLUMNS = ("min_m", "mean_m", "interior_min_m")


def _load_bundle_json(bundle_dir: str, name: str) -> dict:
    path = os.path.join(bundle_dir, name)
    try:
        with open(path, "r", encoding="ascii") as fh:
            return json.load(fh)
    except OSError as e:
        raise CorruptBundle(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CorruptBundle(f"{path}: invalid JSON: {e}") from e


def report_tables(bundle_dir: str) -> dict:
    """Structured report data read back from a bundle directory."""
    manifest = _load_bundle_json(bundle_dir, "manifest.json")
    metrics = _load_bundle_json(bundle_dir, manifest.get("metrics", "metrics.json"))
    try:
        losses = metrics["losses"]
        loss_rows = [
            (phase, [losses[phase][c] for c in LOSS_COLUMNS])
            for phase in ("before", "after")
        ]
        clearance_rows = []
        for phase in ("before", "after"):
            for stage in ("approach", "manipulate", "back_idle"):
                stats = metrics[f"clearance_{phase}"][stage]
                clearance_rows.append(
                    (phase, stage, [stats[c] for c in CLEARANCE_COLUMNS])
                )
    except KeyError as e:
        raise CorruptBundle(f"metrics.json missing key {e}") from e
    speeds_path = os.path.join(bundle_dir, manifest.get("speeds", "speeds.csv"))
    try:
        with open(speeds_path, "r", encoding="ascii", newline="") as fh:
            speed_rows = list(csv.reader(fh))
    except OSError as e:
        raise CorruptBundle(f"cannot read {speeds_path}: {e}") from e
    return {
        "losses": loss_rows,
        "clearance": clearance_rows,
        "speeds": speed_rows,
        "arc_length_initial_m": metrics["arc_length_initial_m"],
        "arc_length_optimized_m": metrics["arc_length_optimized_m"],
        "arc_length_timed_m": metrics["arc_length_timed_m"],
    }


def cmd_report(args) -> int:
    tables = report_tables(args.bundle)
    out = sys.stdout
    print("losses," + ",".join(LOSS_COLUMNS), file=out)
    for phase, values in tables["losses"]:
        print(phase + "," + ",".join(repr(v) for v in values), file=out)
    print("clearance,stage," + ",".join(CLEARANCE_COLUMNS), file=out)
    for phase, stage, values in tables["clearance"]:
        print(f"{phase},{stage}," + ",".join(repr(v) for v in values), file=out)
    print(f"arc_length_initial_m,{tables['arc_length_initial_m']!r}", file=out)
    print(f"arc_length_optimized_m,{tables['arc_length_optimized_m']!r}", file=out)
    print(f"arc_length_timed_m,{tables['arc_length_timed_m']!r}", file=out)
    if args.speeds_csv:
        with open(args.speeds_csv, "w", encoding="ascii", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(tables["speeds"])
        print(f"speeds -> {args.speeds_csv}", file=out)
    return 0


def _timed_from_bundle(bundle_dir: str) -> TimedTrajectory:
    path = os.path.join(bundle_dir, "trajectory_optimized.jsonl")
    frames: List[TimedFrame] = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            for line_no, line in enumerate(fh):
                rec = json.loads(line)
                frames.append(
                    TimedFrame(
                        index=int(rec["frame"]),
                        position=np.array([rec["x_m"], rec["y_m"], rec["z_m"]]),
                        stage=Stage(rec["stage"]),
                        gripper=GripperState(rec["gripper"]),
                    )
                )
    except OSError as e:
        raise CorruptBundle(f"cannot read {path}: {e}") from e
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise CorruptBundle(f"{path} line {line_no + 1}: {e}") from e
    if not frames:
        raise CorruptBundle(f"{path}: no frames")
    return TimedTrajectory(frames=tuple(frames))


def cmd_masks(args) -> int:
    scenario = load_scenario(os.path.join(args.bundle, "scenario.json"))
    timed = _timed_from_bundle(args.bundle)
    obj_frames, grip_frames = actor_frames(
        timed, scenario.spec.grasp_point(), scenario.spec.place_target
    )
    masks = render_guidance_masks(
        timed,
        SphereActor(ActorRole.OBJECT, scenario.object_radius, obj_frames),
        SphereActor(ActorRole.GRIPPER, scenario.gripper_radius, grip_frames),
        scenario.camera,
    )
    os.makedirs(args.out, exist_ok=True)
    for k, m in enumerate(masks):
        write_pgm(os.path.join(args.out, f"frame_{k:04d}.pgm"), m.image)
    print(f"{len(masks)} masks -> {args.out}")
    return 0


def cmd_check(args) -> int:
    results = run_checks(corrupt_gradient=args.corrupt_gradient)
    failed = [r for r in results if not r.ok]
    for r in results:
        status = "pass" if r.ok else "FAIL"
        print(f"{status} {r.name} ({r.seconds:.2f}s): {r.detail}")
    if failed:
        err = OracleMismatch(", ".join(r.name for r in failed))
        print(err.cli_line(), file=sys.stderr)
        return err.exit_code
    print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="voxpick",
        description="Voxel-grid pick-and-place trajectory planner and mask renderer.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="write a scenario file from a template")
    sp.add_argument("--template", choices=["sink", "empty"], default="sink")
    sp.add_argument("--out", required=True, help="scenario JSON output path")
    sp.add_argument(
        "--grasp-offset", type=float, nargs=3, metavar=("DX", "DY", "DZ"),
        help="grasp point offset from the object center, meters",
    )
    sp.add_argument("--clutter", type=int, default=0, help="random clutter boxes")
    sp.add_argument("--seed", type=int, default=0, help="clutter randomization seed")
    _add_config_overrides(sp)
    sp.set_defaults(func=cmd_synth)

    pp = sub.add_parser("plan", help="run the pipeline into a bundle directory")
    pp.add_argument("scenario", help="scenario JSON path")
    pp.add_argument("--out", required=True, help="bundle output directory")
    _add_config_overrides(pp)
    pp.set_defaults(func=cmd_plan)

    rp = sub.add_parser("report", help="summarize a bundle as CSV tables")
    rp.add_argument("bundle", help="bundle directory")
    rp.add_argument("--speeds-csv", default=None, help="also copy speeds.csv here")
    rp.set_defaults(func=cmd_report)

    mp = sub.add_parser("masks", help="re-render guidance masks from a bundle")
    mp.add_argument("bundle", help="bundle directory")
    mp.add_argument("--out", required=True, help="mask output directory")
    mp.set_defaults(func=cmd_masks)

    cp = sub.add_parser("check", help="run the oracle self-test harness")
    cp.add_argument(
        "--corrupt-gradient",
        choices=["loss_length", "loss_acc", "loss_curv", "loss_col"],
        default=None,
        help="fault-injection hook: break one analytic gradient",
    )
    cp.set_defaults(func=cmd_check)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VoxpickError as e:
        print(e.cli_line(), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
