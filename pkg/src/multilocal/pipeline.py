"""End-to-end planner: graph, class-distinct guesses, local solves, selection."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cgraph import ConfigGraph, GridParams, build_graph
from .errors import EmptyGraph, Exhausted, NoConverged, PipelineFailure, SolveFailure
from .model import EePath, RobotModel
from .nags import Guess, SearchConfig, guesses_from_nag, search_nag
from .topo_oracle import h_signature
from .trajopt import SolveOptions, SolveReport, Trajectory, seed_from_guess, solve, transcribe
from .world import World, collides_batch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Planner settings.

    ``start`` is ``(x, y, w)`` at ``t = 0``.  ``goal`` is ``None`` for "any
    vertex at ``t = 1``" or ``(x, y, w)`` for one vertex.  With
    ``pin_endpoints`` the optimizer keeps the first and last base positions of
    each guess fixed, which keeps classes with a fixed start and goal meaningful.
    """

    grid: GridParams
    start: tuple
    n: int = 1
    T: int = 200
    dt: float = 0.2
    goal: tuple | None = None
    nags_cfg: SearchConfig = field(default_factory=SearchConfig)
    clearance_margin: float = 0.01
    pin_endpoints: bool = True
    solve_opts: SolveOptions = field(default_factory=SolveOptions)
    n_jobs: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.T < 2:
            raise ValueError("T must be >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.clearance_margin < 0:
            raise ValueError("clearance_margin must be >= 0")
        if len(self.start) != 3 or self.start[2] not in (-1, 1):
            raise ValueError("start must be (x, y, w) with w in {-1, +1}")
        if self.goal is not None and (len(self.goal) != 3 or self.goal[2] not in (-1, 1)):
            raise ValueError("goal must be None or (x, y, w) with w in {-1, +1}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")


@dataclass(frozen=True)
class GuessOutcome:
    """What happened to one guess.  ``trajectory`` is the last iterate even on failure."""

    guess: Guess
    seed: Trajectory
    report: SolveReport
    trajectory: Trajectory
    converged: bool
    failure: str = ""
    seed_signature: str = ""
    signature: str = ""

    @property
    def homotopy_check(self) -> str:
        """``"pass"`` if the optimized base path kept the seed's signature, else ``"warn"``."""
        return "pass" if self.seed_signature == self.signature else "warn"


@dataclass
class PipelineResult:
    best_index: int | None
    outcomes: list
    guesses: list
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    graph: ConfigGraph | None = None
    nag: object = None

    @property
    def best(self) -> Trajectory | None:
        return None if self.best_index is None else self.outcomes[self.best_index].trajectory

    @property
    def all(self) -> list:
        return [(o.report, o.trajectory if o.converged else o.failure) for o in self.outcomes]


def select_best(reports) -> int:
    """Index of the cheapest converged entry; ties go to the lowest index.

    ``reports`` holds ``(cost, converged)`` pairs.
    """
    best, best_cost = None, np.inf
    for i, (cost, ok) in enumerate(reports):
        if ok and cost < best_cost:
            best, best_cost = i, cost
    if best is None:
        raise NoConverged("no converged solve to select from")
    return best


def _solve_one(args):
    world, robot, path, cfg, guess, start_xy = args
    seed = seed_from_guess(guess.base, guess.elbow, guess.t, robot, path, cfg.T, cfg.dt,
                           guess_w=guess.w)
    pins = (start_xy, tuple(guess.base[-1])) if cfg.pin_endpoints else (None, None)
    problem = transcribe(world, robot, path, cfg.T, cfg.dt, cfg.clearance_margin,
                         pin_start=pins[0], pin_goal=pins[1])
    try:
        report, traj = solve(problem, seed, cfg.solve_opts)
        failure = ""
    except SolveFailure as exc:
        report, traj, failure = exc.report, exc.trajectory, exc.reason
    converged = not failure
    if converged and collides_batch(world, robot, traj.base, traj.elbow, traj.ee).any():
        converged, failure = False, "collision post-check failed"
        report = replace(report, converged=False, reason=failure)
    anchors = world.anchors()
    return GuessOutcome(guess=guess, seed=seed, report=report, trajectory=traj,
                        converged=converged, failure=failure,
                        seed_signature=str(h_signature(guess.base, anchors)),
                        signature=str(h_signature(traj.base, anchors)))


def make_guesses(world: World, robot: RobotModel, path: EePath, cfg: PipelineConfig):
    """Build the graph and run the class search.

    Returns ``(graph, guesses, nag, warnings, timings)``; raises
    :class:`PipelineFailure` if the graph is empty or no class is found.
    """
    warnings, timings = [], {}
    t0 = time.perf_counter()
    try:
        graph = build_graph(world, robot, path, cfg.grid)
    except EmptyGraph as exc:
        raise PipelineFailure(f"configuration graph is empty: {exc}") from exc
    timings["graph_s"] = time.perf_counter() - t0

    sx, sy, sw = cfg.start
    try:
        start = graph.find(sx, sy, 0.0, sw)
    except KeyError as exc:
        raise PipelineFailure(f"start is not a graph vertex: {exc.args[0]}") from exc
    goal = cfg.nags_cfg.goal
    if cfg.goal is not None:
        gx, gy, gw = cfg.goal
        try:
            goal = graph.find(gx, gy, 1.0, gw)
        except KeyError as exc:
            raise PipelineFailure(f"goal is not a graph vertex: {exc.args[0]}") from exc
    scfg = replace(cfg.nags_cfg, n_classes=cfg.n, goal=goal)

    t0 = time.perf_counter()
    try:
        nag = search_nag(graph, start, scfg)
        guesses = guesses_from_nag(graph, nag)
    except Exhausted as exc:
        nag = exc.nag
        guesses = guesses_from_nag(graph, nag)
        if not guesses:
            raise PipelineFailure("class search found no path to the goal") from exc
        msg = f"only {len(guesses)} of {cfg.n} requested classes exist"
        warnings.append(msg)
        log.warning(msg)
    timings["nags_s"] = time.perf_counter() - t0
    return graph, guesses, nag, warnings, timings


def find_path(world: World, robot: RobotModel, path: EePath, cfg: PipelineConfig,
              guesses_only: bool = False) -> PipelineResult:
    """Plan a multi-locally optimal motion.

    With ``guesses_only`` the solves are skipped and ``outcomes`` is empty.

    Raises
    ------
    PipelineFailure
        If the graph is empty, no class is found, or every solve fails (the
        partial result is attached as ``exc.result``).
    """
    graph, guesses, nag, warnings, timings = make_guesses(world, robot, path, cfg)
    result = PipelineResult(best_index=None, outcomes=[], guesses=guesses, warnings=warnings,
                            timings=timings, graph=graph, nag=nag)
    if guesses_only:
        return result

    start_xy = tuple(graph.base[graph.find(cfg.start[0], cfg.start[1], 0.0, cfg.start[2])])
    jobs = [(world, robot, path, cfg, g, start_xy) for g in guesses]
    solve_s = []
    if cfg.n_jobs > 1 and len(jobs) > 1:
        t0 = time.perf_counter()
        with ProcessPoolExecutor(max_workers=min(cfg.n_jobs, len(jobs))) as pool:
            outcomes = list(pool.map(_solve_one, jobs))
        solve_s = [(time.perf_counter() - t0) / len(jobs)] * len(jobs)
    else:
        outcomes = []
        for job in jobs:
            t0 = time.perf_counter()
            outcomes.append(_solve_one(job))
            solve_s.append(time.perf_counter() - t0)
    timings["solve_s"] = solve_s
    result.outcomes = outcomes

    for i, o in enumerate(outcomes):
        if not o.converged:
            msg = f"guess {i}: solve failed ({o.failure})"
            warnings.append(msg)
            log.warning(msg)
        elif o.homotopy_check == "warn":
            msg = f"guess {i}: optimized path left its seed's homotopy class"
            warnings.append(msg)
            log.warning(msg)
    try:
        result.best_index = select_best([(o.report.cost, o.converged) for o in outcomes])
    except NoConverged as exc:
        raise PipelineFailure("every trajectory optimization failed", result=result) from exc
    return result
