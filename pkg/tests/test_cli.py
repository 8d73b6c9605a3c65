import copy
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from multilocal.cli import run
from multilocal.errors import SceneError
from multilocal.scenefile import TRAJECTORY_COLUMNS, dumps, load_result, load_scene, parse_scene

SCENES = Path(__file__).parents[1] / "scenes"
FREE_DOC = json.loads((SCENES / "free.json").read_text())


def scene_with(tmp_path, edit):
    doc = copy.deepcopy(FREE_DOC)
    edit(doc)
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(doc))
    return p


class TestParse:
    def test_shipped_scenes_load(self):
        for p in sorted(SCENES.glob("*.json")):
            load_scene(p)

    @pytest.mark.parametrize("edit,field", [
        (lambda d: d["robot"].update(l1=-0.5), "robot.l1"),
        (lambda d: d["robot"].update(colour="red"), "robot.colour"),
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d["grid"].pop("dx"), "grid.dx"),
        (lambda d: d["start"].update(w=0), "start.w"),
        (lambda d: d["pipeline"].update(T=2.5), "pipeline.T"),
        (lambda d: d["world"].update(obstacles=[{"type": "cone"}]), "world.obstacles[0].type"),
        (lambda d: d.setdefault("nags", {}).update(goal="end"), "nags.goal"),
        (lambda d: d["ee_path"]["samples"].append([0.5, 0, 0]), "ee_path.samples[2]"),
    ])
    def test_field_level_errors(self, edit, field):
        doc = copy.deepcopy(FREE_DOC)
        edit(doc)
        with pytest.raises(SceneError, match=r"^" + field.replace("[", r"\[").replace("]", r"\]") + ":"):
            parse_scene(doc)

    def test_defaults(self):
        s = parse_scene(FREE_DOC)
        assert s.config.nags_cfg.variant == "generalized"
        assert s.config.goal is None and s.config.clearance_margin == 0.01

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        with pytest.raises(SceneError, match="not valid JSON"):
            load_scene(p)


def test_dumps_is_compact_and_exact():
    doc = {"a": [0.1, 1 / 3, None, 2], "b": {"c": [[1.5, -0.0]]}}
    text = dumps(doc)
    assert '"a": [0.1, 0.3333333333333333, null, 2]' in text
    assert json.loads(text) == doc
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


class TestRun:
    def test_free_scene(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run(["--scene", str(SCENES / "free.json"), "--out", str(out),
                    "--dump-graph", "--dump-nag"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["graph.txt", "guess_0.svg", "nag.txt", "overlay.svg", "result.json",
                         "timing.json", "trajectory_0.json"]
        res = load_result(out / "result.json")
        assert res["best_index"] == 0
        g = res["guesses"][0]
        assert g["converged"] and g["cost"] <= 1e-8 and g["homotopy_check"] == "pass"
        traj = json.loads((out / "trajectory_0.json").read_text())
        assert tuple(traj["columns"]) == TRAJECTORY_COLUMNS
        assert len(traj["rows"]) == 21 and traj["rows"][-1][-5:] == [None] * 5
        assert capsys.readouterr().err == ""

    def test_negative_length(self, tmp_path, capsys):
        p = scene_with(tmp_path, lambda d: d["robot"].update(l1=-1.0))
        assert run(["--scene", str(p), "--out", str(tmp_path / "o")]) == 1
        assert "robot.l1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert run(["--scene", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 1

    def test_all_solves_fail(self, tmp_path, capsys):
        def tight(d):
            d["world"]["obstacles"] = [{"type": "box", "min": [0.2, 0.2, -0.5], "max": [0.3, 0.3, -0.1]}]
            d["pipeline"]["clearance_margin"] = 0.5
        out = tmp_path / "o"
        assert run(["--scene", str(scene_with(tmp_path, tight)), "--out", str(out)]) == 2
        err = capsys.readouterr().err.splitlines()
        warning = json.loads(next(line for line in err if line.startswith("{")))
        assert warning["kind"] == "solve"
        res = load_result(out / "result.json")
        assert res["best_index"] is None
        g = res["guesses"][0]
        assert g["converged"] is False and g["failure"] and g["max_ineq_violation"] > 1e-4

    def test_seed_only(self, tmp_path):
        out = tmp_path / "o"
        assert run(["--scene", str(SCENES / "free.json"), "--out", str(out), "--seed-only",
                    "--n", "3"]) == 0
        res = load_result(out / "result.json")
        assert len(res["guesses"]) == 3
        assert all(g["converged"] is None and g["cost"] is None for g in res["guesses"])
        assert not list(out.glob("trajectory_*.json"))

    def test_result_round_trip(self, tmp_path):
        out = tmp_path / "o"
        run(["--scene", str(SCENES / "free.json"), "--out", str(out), "--n", "3"])
        res = load_result(out / "result.json")
        costs = [g["cost"] for g in res["guesses"]]
        assert res["best_index"] == int(np.argmin(costs))
        rows = load_result(out / "trajectory_0.json")["rows"]
        assert rows.dtype == float and math.isnan(rows[-1, -1])


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "multilocal", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "--scene" in proc.stdout
