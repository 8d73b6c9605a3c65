"""Multi-locally optimal motion planning for a mobile manipulator following an end-effector path.

Typical use::

    from multilocal import load_scene, find_path
    scene = load_scene("scene.json")
    result = find_path(scene.world, scene.robot, scene.path, scene.config)
    result.best  # cheapest converged Trajectory
"""

from .cgraph import ConfigGraph, GridParams, build_graph
from .errors import (
    Exhausted, NoConverged, PipelineFailure, PlanningError, SceneError, SolveFailure,
)
from .model import EePath, FullConfig, ReducedConfig, RobotModel, elbow_ik, reduced_to_full
from .nags import Guess, SearchConfig, modified_nags, search_nag
from .pipeline import PipelineConfig, PipelineResult, find_path, select_best
from .scenefile import Scene, load_scene, parse_scene
from .trajopt import SolveOptions, SolveReport, Trajectory, seed_from_guess, solve, transcribe
from .world import Box, Sphere, World

__all__ = [
    "Box", "ConfigGraph", "EePath", "Exhausted", "FullConfig", "GridParams", "Guess",
    "NoConverged", "PipelineConfig", "PipelineFailure", "PipelineResult", "PlanningError",
    "ReducedConfig", "RobotModel", "Scene", "SceneError", "SearchConfig", "SolveFailure",
    "SolveOptions", "SolveReport", "Sphere", "Trajectory", "World", "build_graph", "elbow_ik",
    "find_path", "load_scene", "modified_nags", "parse_scene", "reduced_to_full", "search_nag",
    "seed_from_guess", "select_best", "solve", "transcribe",
]
