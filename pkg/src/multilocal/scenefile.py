"""Scene JSON parsing and result JSON serialization.

Scene validation errors carry the dotted field path of the offending value,
e.g. ``robot.l1: must be > 0``.  Floats are written with Python's shortest
round-trip repr, so parsing a result file back gives the exact same values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cgraph import GridParams
from .errors import SceneError
from .model import EePath, RobotModel
from .nags import SearchConfig
from .pipeline import PipelineConfig, PipelineResult
from .trajopt import Trajectory
from .world import Box, Sphere, World

TRAJECTORY_COLUMNS = (
    "t", "x", "y", "heading", "elbow_x", "elbow_y", "elbow_z", "ee_x", "ee_y", "ee_z", "a", "b",
    "v", "omega", "d_elbow_x", "d_elbow_y", "d_elbow_z",
)

_SCHEMA = {
    "robot": ({"l1", "l2"}, {"arm_radius", "base_radius", "base_depth"}),
    "world": ({"x_max", "y_max"}, {"obstacles"}),
    "ee_path": ({"samples"}, set()),
    "grid": ({"dx", "dy", "dt"}, {"t_scale", "epsilon_flip", "subsample"}),
    "pipeline": (set(), {"n", "T", "dt", "clearance_margin", "pin_endpoints", "n_jobs"}),
    "nags": (set(), {"variant", "goal", "distinct_goal_positions_are_distinct_classes"}),
    "start": ({"x", "y", "w"}, set()),
}
_TOP_REQUIRED = {"robot", "world", "ee_path", "grid", "start"}
_FIELDS = {k: req | opt for k, (req, opt) in _SCHEMA.items()}


@dataclass(frozen=True)
class Scene:
    robot: RobotModel
    world: World
    path: EePath
    config: PipelineConfig


def _keys(obj, where, required, optional):
    if not isinstance(obj, dict):
        raise SceneError(f"{where}: expected an object")
    missing = sorted(required - obj.keys())
    if missing:
        raise SceneError(f"{where}.{missing[0]}: required field is missing")
    unknown = sorted(obj.keys() - required - optional)
    if unknown:
        raise SceneError(f"{where}.{unknown[0]}: unknown field")


def _num(obj, key, where, default=None, kind=float):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SceneError(f"{where}.{key}: expected a number")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise SceneError(f"{where}.{key}: expected an integer")
        return int(v)
    if not math.isfinite(v):
        raise SceneError(f"{where}.{key}: must be finite")
    return float(v)


def _vec(v, where, n):
    if (not isinstance(v, list) or len(v) != n
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
        raise SceneError(f"{where}: expected a list of {n} numbers")
    return tuple(float(c) for c in v)


def _build(where, ctor, *args, **kwargs):
    try:
        return ctor(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        # constructor messages lead with the field name when one field is at fault
        field_name = str(exc).split(" ", 1)[0]
        if field_name in _FIELDS.get(where, ()):
            raise SceneError(f"{where}.{field_name}: {exc}") from exc
        raise SceneError(f"{where}: {exc}") from exc


def _xyw(obj, where):
    _keys(obj, where, {"x", "y", "w"}, set())
    w = _num(obj, "w", where, kind=int)
    if w not in (-1, 1):
        raise SceneError(f"{where}.w: must be -1 or +1")
    return (_num(obj, "x", where), _num(obj, "y", where), w)


def _obstacle(o, where):
    if not isinstance(o, dict) or o.get("type") not in ("sphere", "box"):
        raise SceneError(f"{where}.type: must be \"sphere\" or \"box\"")
    if o["type"] == "sphere":
        _keys(o, where, {"type", "center", "radius"}, set())
        return _build(where, Sphere, _vec(o["center"], f"{where}.center", 3),
                      _num(o, "radius", where))
    _keys(o, where, {"type", "min", "max"}, set())
    return _build(where, Box, _vec(o["min"], f"{where}.min", 3), _vec(o["max"], f"{where}.max", 3))


def parse_scene(data: dict) -> Scene:
    """Validate a decoded scene document and build the planner inputs."""
    if not isinstance(data, dict):
        raise SceneError("scene: expected an object")
    unknown = sorted(data.keys() - _SCHEMA.keys())
    if unknown:
        raise SceneError(f"{unknown[0]}: unknown field")
    missing = sorted(_TOP_REQUIRED - data.keys())
    if missing:
        raise SceneError(f"{missing[0]}: required field is missing")
    for key, (req, opt) in _SCHEMA.items():
        if key in data:
            _keys(data[key], key, req, opt)

    r = data["robot"]
    robot = _build("robot", RobotModel, _num(r, "l1", "robot"), _num(r, "l2", "robot"),
                   arm_radius=_num(r, "arm_radius", "robot", 0.0),
                   base_radius=_num(r, "base_radius", "robot", 0.0),
                   base_depth=_num(r, "base_depth", "robot", 0.0))

    wd = data["world"]
    obstacles = wd.get("obstacles", [])
    if not isinstance(obstacles, list):
        raise SceneError("world.obstacles: expected a list")
    world = _build("world", World, tuple(_obstacle(o, f"world.obstacles[{i}]")
                                         for i, o in enumerate(obstacles)),
                   x_max=_num(wd, "x_max", "world"), y_max=_num(wd, "y_max", "world"))

    samples = data["ee_path"]["samples"]
    if not isinstance(samples, list):
        raise SceneError("ee_path.samples: expected a list")
    rows = [_vec(s, f"ee_path.samples[{i}]", 4) for i, s in enumerate(samples)]
    path = _build("ee_path.samples", EePath.from_samples, rows)

    g = data["grid"]
    grid = _build("grid", GridParams, _num(g, "dx", "grid"), _num(g, "dy", "grid"),
                  _num(g, "dt", "grid"), world.x_max, world.y_max,
                  t_scale=_num(g, "t_scale", "grid", 1.0),
                  epsilon_flip=_num(g, "epsilon_flip", "grid", 0.0),
                  subsample=_num(g, "subsample", "grid", GridParams.subsample))

    nd = data.get("nags", {})
    goal = nd.get("goal", "t1")
    goal_xyw = None
    if isinstance(goal, dict):
        goal_xyw = _xyw(goal, "nags.goal")
    elif goal != "t1":
        raise SceneError("nags.goal: must be \"t1\" or an object {x, y, w}")
    distinct = nd.get("distinct_goal_positions_are_distinct_classes", True)
    if not isinstance(distinct, bool):
        raise SceneError("nags.distinct_goal_positions_are_distinct_classes: expected a boolean")
    nags_cfg = _build("nags", SearchConfig, variant=nd.get("variant", "generalized"),
                      distinct_goal_positions_are_distinct_classes=distinct)

    p = data.get("pipeline", {})
    pin = p.get("pin_endpoints", True)
    if not isinstance(pin, bool):
        raise SceneError("pipeline.pin_endpoints: expected a boolean")
    cfg = _build("pipeline", PipelineConfig, grid=grid, start=_xyw(data["start"], "start"),
                 n=_num(p, "n", "pipeline", 1, kind=int), T=_num(p, "T", "pipeline", 200, kind=int),
                 dt=_num(p, "dt", "pipeline", 0.2), goal=goal_xyw, nags_cfg=nags_cfg,
                 clearance_margin=_num(p, "clearance_margin", "pipeline", 0.01),
                 pin_endpoints=pin, n_jobs=_num(p, "n_jobs", "pipeline", 1, kind=int))
    return Scene(robot=robot, world=world, path=path, config=cfg)


def load_scene(path) -> Scene:
    """Read and validate a scene file; I/O and JSON errors become :class:`SceneError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SceneError(f"cannot read scene file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file is not valid JSON: {exc}") from exc
    return parse_scene(data)


def _f(x):
    x = float(x)
    return x if math.isfinite(x) else None


def trajectory_rows(traj: Trajectory) -> list:
    """One row per knot in :data:`TRAJECTORY_COLUMNS` order; the last row has null controls."""
    rows = []
    for k in range(traj.T + 1):
        row = [k / traj.T, *traj.base[k], traj.heading[k], *traj.elbow[k], *traj.ee[k], traj.a[k], traj.b[k]]
        if k < traj.T:
            row += [traj.v[k], traj.omega[k], *traj.delta_elbow[k]]
        else:
            row += [None] * 5
        rows.append([None if c is None else _f(c) for c in row])
    return rows


def _trajectory_doc(traj: Trajectory) -> dict:
    return {"dt": _f(traj.dt), "columns": list(TRAJECTORY_COLUMNS), "rows": trajectory_rows(traj)}


def _guess_doc(g) -> dict:
    return {"cost": _f(g.cost), "graph_vertices": [int(i) for i in g.cg_ids],
            "columns": ["x", "y", "t", "w", "elbow_x", "elbow_y", "elbow_z"],
            "rows": [[_f(g.base[k, 0]), _f(g.base[k, 1]), _f(g.t[k]), int(g.w[k]),
                      *(_f(c) for c in g.elbow[k])] for k in range(len(g.t))]}


def result_document(result: PipelineResult, anchors=None) -> dict:
    """JSON-ready result.  Timings are left out so the document is reproducible."""
    from .topo_oracle import h_signature

    guesses = []
    for i, g in enumerate(result.guesses):
        rec = {"index": i, "h_class_label": str(i + 1), "guess": _guess_doc(g)}
        if anchors is not None:
            rec["seed_signature"] = str(h_signature(g.base, anchors))
        if i < len(result.outcomes):
            o = result.outcomes[i]
            rec.update({
                "converged": o.converged, "failure": o.failure, "cost": _f(o.report.cost),
                "max_eq_violation": _f(o.report.max_eq_violation),
                "max_ineq_violation": _f(o.report.max_ineq_violation),
                "stationarity": _f(o.report.stationarity), "iterations": o.report.iterations,
                "seed_signature": o.seed_signature, "signature": o.signature,
                "homotopy_check": o.homotopy_check, "trajectory": _trajectory_doc(o.trajectory),
            })
        else:
            rec.update({"converged": None, "cost": None})
        guesses.append(rec)
    return {"best_index": result.best_index, "guesses": guesses,
            "warnings": list(result.warnings)}


def _encode(obj, indent):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad} {json.dumps(k)}: {_encode(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list) and any(isinstance(v, (list, dict)) for v in obj):
        items = [pad + " " + _encode(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    # scalars and flat lists stay on one line
    return json.dumps(obj, allow_nan=False)


def dumps(doc) -> str:
    return _encode(doc, 0) + "\n"


def write_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))


def _float_rows(rows):
    return np.array([[np.nan if c is None else c for c in r] for r in rows], dtype=float)


def load_result(path) -> dict:
    """Read a result or trajectory file back.

    Trajectory rows become float arrays with ``nan`` where the file has ``null``.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if "rows" in doc:
        doc["rows"] = _float_rows(doc["rows"])
    for rec in doc.get("guesses", ()):
        if "trajectory" in rec:
            rec["trajectory"]["rows"] = _float_rows(rec["trajectory"]["rows"])
    return doc
