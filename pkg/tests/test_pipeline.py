"""End-to-end pipeline: scenario serialization, bundle invariants,
determinism."""

import filecmp
import json
import os

import numpy as np
import pytest

from voxpick.errors import ParseError
from voxpick.grid_planner import Stage
from voxpick.pipeline import (
    Scenario,
    actor_frames,
    load_scenario,
    run,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_bundle,
)
from voxpick.projection import PALETTE, read_pgm
from voxpick.templates import TEMPLATES, empty_scenario, make_template, sink_scenario
from voxpick.time_alloc import GripperState


def test_scenario_dict_round_trip():
    s = sink_scenario(grasp_offset=(0.0, 0.0, 0.4))
    d = scenario_to_dict(s)
    back = scenario_from_dict(d)
    assert scenario_to_dict(back) == d


def test_scenario_file_round_trip(tmp_path):
    s = empty_scenario()
    path = tmp_path / "scenario.json"
    save_scenario(s, path)
    back = load_scenario(path)
    assert scenario_to_dict(back) == scenario_to_dict(s)


def test_scenario_defaults_fill_in():
    d = scenario_to_dict(sink_scenario())
    del d["planner"]
    del d["frames"]
    s = scenario_from_dict(d)
    assert s.total_frames == 49
    assert s.config.iterations == 200
    assert s.config.d_safe == pytest.approx(2 * s.bounds.voxel_size)


def test_scenario_rejects_out_of_bounds_keypoints():
    d = scenario_to_dict(sink_scenario())
    d["scene"]["effector_start_m"] = [-1.0, 0.0, 0.0]
    with pytest.raises(ParseError):
        scenario_from_dict(d)


def test_scenario_rejects_garbage():
    with pytest.raises(ParseError):
        scenario_from_dict({"grid": {"dims": [2, 2]}})


def test_make_template_names():
    assert set(TEMPLATES) == {"sink", "empty"}
    with pytest.raises(ParseError):
        make_template("garage")


def test_bundle_shape(sink_bundle):
    b = sink_bundle
    assert b.timed_initial.n_frames == b.scenario.total_frames
    assert b.timed_optimized.n_frames == b.scenario.total_frames
    assert len(b.masks) == b.scenario.total_frames
    assert set(b.clearance_before) == {"approach", "manipulate", "back_idle"}
    assert b.points_outside == 0
    # junctions stay pinned through optimization
    for s0, s1 in zip(b.initial.subs, b.optimized.subs):
        np.testing.assert_array_equal(s0.points[0], s1.points[0])
        np.testing.assert_array_equal(s0.points[-1], s1.points[-1])


def test_actor_frames_object_rides_the_closed_gripper(sink_bundle):
    b = sink_bundle
    obj, grip = actor_frames(
        b.timed_optimized, b.scenario.spec.grasp_point(), b.scenario.spec.place_target
    )
    start = np.asarray(b.scenario.spec.object_position)
    target = np.asarray(b.scenario.spec.place_target)
    released = False
    for k, f in enumerate(b.timed_optimized.frames):
        if f.gripper is GripperState.CLOSED:
            np.testing.assert_array_equal(obj[k], grip[k])
            released = True
        elif not released:
            np.testing.assert_array_equal(obj[k], start)
        else:
            np.testing.assert_array_equal(obj[k], target)


def test_empty_scene_plans_straight():
    bundle = run(empty_scenario())
    # free space: the optimizer has nothing to push against
    assert bundle.loss_report.after.col == 0.0
    assert bundle.clearance_after["manipulate"].min_m > bundle.scenario.config.d_safe


def _tree_bytes(root):
    out = {}
    for base, _, files in os.walk(root):
        for name in files:
            p = os.path.join(base, name)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


def test_write_bundle_is_byte_deterministic(sink_bundle, tmp_path):
    d1 = tmp_path / "b1"
    d2 = tmp_path / "b2"
    write_bundle(sink_bundle, d1)
    write_bundle(sink_bundle, d2)
    t1, t2 = _tree_bytes(d1), _tree_bytes(d2)
    assert t1.keys() == t2.keys()
    assert all(t1[k] == t2[k] for k in t1)


def test_bundle_layout_and_contents(sink_bundle, tmp_path):
    out = tmp_path / "bundle"
    write_bundle(sink_bundle, out)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["total_frames"] == sink_bundle.scenario.total_frames
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["losses"]["after"]["total"] <= metrics["losses"]["before"]["total"]

    lines = (out / "trajectory_optimized.jsonl").read_text().splitlines()
    assert len(lines) == sink_bundle.scenario.total_frames
    rec = json.loads(lines[0])
    assert {"frame", "stage", "gripper", "x_m", "y_m", "z_m", "pre_opt_x_m"} <= set(rec)

    mask_manifest = json.loads((out / "masks" / "manifest.json").read_text())
    assert mask_manifest["palette"] == PALETTE
    img = read_pgm(out / "masks" / mask_manifest["files"][10])
    np.testing.assert_array_equal(img, sink_bundle.masks[10].image)

    header, *rows = (out / "speeds.csv").read_text().splitlines()
    assert header == "frame,speed_before_m,speed_after_m"
    assert len(rows) == max(len(sink_bundle.speeds_before), len(sink_bundle.speeds_after))


def test_initial_trajectory_matches_serialized_initial(sink_bundle, tmp_path):
    out = tmp_path / "bundle"
    write_bundle(sink_bundle, out)
    lines = (out / "trajectory_initial.jsonl").read_text().splitlines()
    pos = np.array(
        [[json.loads(l)[k] for k in ("x_m", "y_m", "z_m")] for l in lines]
    )
    np.testing.assert_allclose(pos, sink_bundle.timed_initial.positions())
