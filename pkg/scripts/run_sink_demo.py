#!/usr/bin/env python3
"""Run the sink benchmark scene end to end and print a short summary.

Usage:
    python3 scripts/run_sink_demo.py [--out OUT_DIR] [--template sink|empty]

Writes a full run bundle (scenario, trajectories, metrics, speed CSV,
guidance masks) and prints the before/after objective, per-stage
clearances, and where the optimizer lifted the manipulation leg.
"""

import argparse

import numpy as np

from voxpick.pipeline import run, write_bundle
from voxpick.templates import make_template


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out_sink", help="bundle output directory")
    ap.add_argument("--template", default="sink", choices=["sink", "empty"])
    args = ap.parse_args()

    scenario = make_template(args.template)
    bundle = run(scenario)
    write_bundle(bundle, args.out)

    rep = bundle.loss_report
    print(f"scenario: {scenario.name} ({scenario.dims} voxels, "
          f"{scenario.bounds.voxel_size} m each)")
    print(f"objective: {rep.before.total:.4f} -> {rep.after.total:.4f} "
          f"(collision term {rep.before.col:.4f} -> {rep.after.col:.4f})")
    print(f"{'stage':<12}{'clear before':>14}{'clear after':>14}")
    for stage in ("approach", "manipulate", "back_idle"):
        b = bundle.clearance_before[stage]
        a = bundle.clearance_after[stage]
        print(f"{stage:<12}{b.min_m:>14.4f}{a.min_m:>14.4f}")
    for s0, s1 in zip(bundle.initial.subs, bundle.optimized.subs):
        moved = float(np.linalg.norm(s1.points - s0.points, axis=1).max())
        print(f"{s0.stage.value}: max waypoint displacement {moved:.3f} m, "
              f"apex z {s0.points[:, 2].max():.3f} -> {s1.points[:, 2].max():.3f} m")
    print(f"bundle -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
