#!/usr/bin/env python3
"""Export per-stage normalized speed profiles from a run bundle.

Usage:
    python3 scripts/export_speed_profiles.py BUNDLE_DIR [--out profiles.csv]

Reads trajectory_initial.jsonl and trajectory_optimized.jsonl from the
bundle and writes one row per chord: frame index, stage, normalized speed
of the initial and optimized trajectories, and the ideal sine value for
that chord's position in its stage. Handy for eyeballing how closely the
time reallocation tracks the target profile.
"""

import argparse
import csv
import json
import os
from collections import Counter

import numpy as np


def _load(path):
    frames = [json.loads(line) for line in open(path, encoding="ascii")]
    pos = np.array([[f["x_m"], f["y_m"], f["z_m"]] for f in frames])
    stages = [f["stage"] for f in frames]
    return pos, stages


def _stage_profiles(pos, stages):
    """(frame, stage, normalized speed, sine target) per chord; a chord
    into a junction frame still belongs to the stage it finishes."""
    speeds = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    chord_stage = stages[:-1]
    counts = Counter(chord_stage)
    rows = []
    offset = {}
    seen = Counter()
    for k, st in enumerate(chord_stage):
        n = counts[st]
        i = seen[st]
        seen[st] += 1
        offset.setdefault(st, k)
        rows.append((k, st, speeds[k], np.sin(np.pi * (i + 0.5) / n)))
    # normalize per stage
    out = []
    for k, st, sp, target in rows:
        block = speeds[offset[st] : offset[st] + counts[st]]
        out.append((k, st, sp / block.max(), target))
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("bundle", help="run bundle directory")
    ap.add_argument("--out", default="profiles.csv")
    args = ap.parse_args()

    init_pos, stages = _load(os.path.join(args.bundle, "trajectory_initial.jsonl"))
    opt_pos, _ = _load(os.path.join(args.bundle, "trajectory_optimized.jsonl"))
    init_rows = _stage_profiles(init_pos, stages)
    opt_rows = _stage_profiles(opt_pos, stages)

    with open(args.out, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "stage", "initial_norm_speed", "optimized_norm_speed", "sine_target"])
        for (k, st, si, target), (_, _, so, _) in zip(init_rows, opt_rows):
            w.writerow([k, st, f"{si:.6f}", f"{so:.6f}", f"{target:.6f}"])

    worst = max(abs(si - t) for _, _, si, t in init_rows)
    print(f"{len(init_rows)} chords -> {args.out}")
    print(f"max |initial - sine target| = {worst:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
