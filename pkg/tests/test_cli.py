"""Command-line interface: subcommands, exit codes, and error lines."""

import json
import os

import numpy as np
import pytest

from voxpick.cli import main, report_tables
from voxpick.pipeline import load_scenario, scenario_to_dict
from voxpick.projection import read_pgm
from voxpick.templates import sink_scenario


@pytest.fixture(scope="module")
def planned(tmp_path_factory):
    """One synth + plan shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "sink.json"
    bundle = root / "bundle"
    assert main(["synth", "--template", "sink", "--out", str(scenario)]) == 0
    assert main(["plan", str(scenario), "--out", str(bundle)]) == 0
    return scenario, bundle


def test_synth_matches_template(planned):
    scenario, _ = planned
    assert scenario_to_dict(load_scenario(scenario)) == scenario_to_dict(sink_scenario())


def test_synth_clutter_is_seeded(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    c = tmp_path / "c.json"
    for path in (a, b):
        assert main(["synth", "--out", str(path), "--clutter", "4", "--seed", "11"]) == 0
    assert main(["synth", "--out", str(c), "--clutter", "4", "--seed", "12"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_synth_rejects_bad_overrides(tmp_path, capsys):
    rc = main(["synth", "--out", str(tmp_path / "x.json"), "--iterations", "0"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:parse:parse:")


def test_plan_overrides_reach_the_scenario(planned, tmp_path):
    scenario, _ = planned
    out = tmp_path / "fast"
    assert main(["plan", str(scenario), "--out", str(out), "--iterations", "5",
                 "--frames", "25"]) == 0
    saved = json.loads((out / "scenario.json").read_text())
    assert saved["planner"]["iterations"] == 5
    assert saved["frames"]["total_frames"] == 25
    assert len((out / "trajectory_optimized.jsonl").read_text().splitlines()) == 25


def test_plan_missing_scenario_exits_2(tmp_path, capsys):
    rc = main(["plan", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:parse:")


def test_plan_reports_no_path(planned, tmp_path, capsys):
    scenario, _ = planned
    d = json.loads(scenario.read_text())
    # wall across the whole cross-section between pick and place
    d["scene"]["primitives"].append(
        {"type": "box", "name": "wall", "min_m": [8.0, 0.0, 0.0], "max_m": [8.8, 12.8, 12.8]}
    )
    walled = tmp_path / "walled.json"
    walled.write_text(json.dumps(d))
    rc = main(["plan", str(walled), "--out", str(tmp_path / "w")])
    assert rc == 3
    assert capsys.readouterr().err.startswith("error:plan:no-path:")


def test_report_tables_and_csv(planned, tmp_path, capsys):
    _, bundle = planned
    speeds = tmp_path / "speeds.csv"
    assert main(["report", str(bundle), "--speeds-csv", str(speeds)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("losses,col,len,acc,curv,total")
    assert "after,manipulate," in out
    assert speeds.exists()
    tables = report_tables(str(bundle))
    assert len(tables["clearance"]) == 6
    (before, after) = (dict(tables["losses"])[k][-1] for k in ("before", "after"))
    assert after <= before


def test_report_corrupt_bundle(tmp_path, capsys):
    os.makedirs(tmp_path / "junk")
    (tmp_path / "junk" / "manifest.json").write_text("{}")
    rc = main(["report", str(tmp_path / "junk")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:report:corrupt-bundle:")


def test_masks_rerender_matches_bundle(planned, tmp_path):
    _, bundle = planned
    out = tmp_path / "masks"
    assert main(["masks", str(bundle), "--out", str(out)]) == 0
    for k in (0, 17, 48):
        a = read_pgm(out / f"frame_{k:04d}.pgm")
        b = read_pgm(bundle / "masks" / f"frame_{k:04d}.pgm")
        np.testing.assert_array_equal(a, b)


def test_plan_is_byte_deterministic(planned, tmp_path):
    scenario, bundle = planned
    again = tmp_path / "again"
    assert main(["plan", str(scenario), "--out", str(again)]) == 0
    for base, _, files in os.walk(bundle):
        rel = os.path.relpath(base, bundle)
        for name in files:
            p1 = os.path.join(base, name)
            p2 = os.path.join(again, rel, name)
            assert open(p1, "rb").read() == open(p2, "rb").read(), name


def test_check_detects_injected_gradient_fault(capsys):
    rc = main(["check", "--corrupt-gradient", "loss_acc"])
    captured = capsys.readouterr()
    assert rc == 6
    assert "FAIL gradient-correctness" in captured.out
    assert captured.err.startswith("error:check:oracle-mismatch:")
