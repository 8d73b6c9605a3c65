"""Scene builders and small hand-made graphs shared by the test modules."""

import math

import numpy as np

from multilocal.cgraph import GridParams
from multilocal.errors import DegenerateVertical, Unreachable
from multilocal.model import EePath, FullConfig, RobotModel, ee_position, elbow_ik
from multilocal.world import Box, World, obs


class DictGraph:
    """Undirected weighted graph with the ``neighbors`` interface the search needs."""

    def __init__(self, edges):
        self.adj = {}
        for a, b, c in edges:
            self.adj.setdefault(a, []).append((b, c))
            self.adj.setdefault(b, []).append((a, c))
        for k in self.adj:
            self.adj[k].sort()

    def neighbors(self, i):
        return self.adj.get(i, [])

    def __len__(self):
        return len(self.adj)


def euclid_graph(points, pairs):
    names = list(points)  # vertex ids follow insertion order; the search tie-breaks on them
    idx = {n: i for i, n in enumerate(names)}
    edges = [(idx[a], idx[b], math.dist(points[a], points[b])) for a, b in pairs]
    return DictGraph(edges), idx


# Non-uniform graph where parent-set equivalence at pop time matters: the
# cheapest route to F goes G-H-F, and a second arrival at F through D-B is
# deformable into it across the triangles of the graph.
COUNTER_A_POINTS = {
    "G": (0.071, 0.436), "E": (0.87, 0.495), "A": (0.655, 0.403), "H": (0.268, 0.049),
    "B": (0.639, 0.223), "D": (0.215, 0.413), "F": (0.729, 0.125),
}
COUNTER_A_PAIRS = [
    ("A", "B"), ("A", "D"), ("A", "E"), ("A", "F"), ("B", "D"), ("B", "F"), ("B", "H"),
    ("D", "E"), ("D", "G"), ("D", "H"), ("E", "F"), ("E", "G"), ("F", "H"), ("G", "H"),
]


def counter_a():
    """``(graph, start, goal, names)`` for the non-uniform counterexample graph."""
    g, idx = euclid_graph(COUNTER_A_POINTS, COUNTER_A_PAIRS)
    return g, idx["G"], idx["F"], idx


def counter_b():
    """Bridged square A-B-C-D with diagonal B-D, all unit costs; start A, goal C."""
    A, B, C, D = range(4)
    g = DictGraph([(A, B, 1.0), (B, C, 1.0), (A, D, 1.0), (D, C, 1.0), (B, D, 1.0)])
    return g, A, C


# Desk-scale randomized scenes with t-invariant prismatic boxes.  The arm is
# long and the ee path far away, so every base position in the grid is
# reachable and the obstacles alone shape the free space.
DESK_ROBOT = RobotModel(3.0, 3.0, base_depth=0.5)
DESK_PATH = EePath(np.array([0.0, 1.0]), np.array([[4.0, -0.5, 0.3], [4.0, 0.5, 0.3]]))
DESK_GRID = GridParams(0.1, 0.1, 1 / 9, 1.4, 1.4)
DESK_START = (-1.2, 0.0, 0.0, 1)
DESK_GOAL = (1.2, 0.0, 1.0, 1)


def desk_world(rng):
    n = int(rng.integers(1, 3))
    boxes = []
    while len(boxes) < n:
        c = rng.uniform(-0.8, 0.8, 2)
        h = rng.uniform(0.1, 0.35, 2)
        if abs(c[0]) + h[0] > 1.05:  # keep the start and goal columns free
            continue
        boxes.append(Box((c[0] - h[0], c[1] - h[1], -0.5), (c[0] + h[0], c[1] + h[1], -0.1)))
    return World(tuple(boxes), 1.4, 1.4)


# Two low blocks on the base plane with the end effector sweeping past above
# them; four classes: between/around either block.
SIMPLE_ROBOT = RobotModel(0.5, 0.5, arm_radius=0.03, base_radius=0.12, base_depth=0.4)
SIMPLE_PATH = EePath(np.array([0.0, 1.0]), np.array([[-1.0, 0.6, 0.2], [1.0, 0.6, 0.2]]))
SIMPLE_WORLD = World((Box((-0.5, -0.1, -0.5), (-0.3, 0.1, -0.1)),
                      Box((0.3, -0.1, -0.5), (0.5, 0.1, -0.1))), 1.5, 1.0)
SIMPLE_GRID = GridParams(0.1, 0.1, 0.05, 1.5, 1.0)


def table_scene():
    """Robot, world, ee path and grid of the table scene (sine-shaped wipe over a table)."""
    robot = RobotModel(0.6, 0.6, arm_radius=0.04, base_radius=0.15, base_depth=0.35)
    xs = np.linspace(-0.6, 0.6, 241)
    pts = np.column_stack([xs, 0.2 + 0.1 * np.sin(2 * np.pi * xs / 0.6), np.full_like(xs, 0.15)])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    path = EePath(s / s[-1], pts)
    nt = int(round(s[-1] / 0.05))  # ee path step 0.05 m
    world = World((Box((-0.8, 0.0, -0.4), (0.8, 0.6, 0.1)),
                   Box((-0.15, -0.7, -0.4), (0.15, -0.4, 0.05))), 1.4, 1.3)
    return robot, world, path, GridParams(0.1, 0.1, 1 / nt, 1.4, 1.3)


class PlanarGrid:
    """Grid graph over integer points with some cells removed (the holes).

    Exposes the attributes the search and the topology oracle read:
    ``neighbors``, ``base`` and CSR ``indptr``/``indices``.
    """

    def __init__(self, nx, ny, holes=(), diagonal=False):
        holes = set(holes)
        pts = [(x, y) for y in range(ny) for x in range(nx) if (x, y) not in holes]
        idx = {p: i for i, p in enumerate(pts)}
        steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        if diagonal:
            steps += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        self.adj = []
        for x, y in pts:
            nb = []
            for sx, sy in steps:
                q = (x + sx, y + sy)
                if q in idx:
                    nb.append((idx[q], math.hypot(sx, sy)))
            self.adj.append(sorted(nb))
        self.base = np.array(pts, dtype=float)
        self.index = idx
        self.indptr = np.cumsum([0] + [len(a) for a in self.adj])
        self.indices = np.array([j for a in self.adj for j, _ in a], dtype=np.int64)

    def neighbors(self, i):
        return self.adj[i]

    def __len__(self):
        return len(self.adj)


def fd_check(fun, x, h=1e-6):
    """Compare the analytic Jacobian of ``fun(x) -> (values, J)`` with central differences.

    Returns ``(rel_err, n_kinks)``.  The error is ``max |J - FD| / max(1, |FD|)``
    over entries; columns where the forward and backward slopes disagree by
    more than ``1e-3`` straddle a nonsmooth point of a distance function and
    are skipped (counted in ``n_kinks``).
    """
    f0, J = fun(x)
    f0 = np.atleast_1d(f0)
    J = J.toarray() if hasattr(J, "toarray") else np.asarray(J).reshape(len(f0), -1)
    worst, kinks = 0.0, 0
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        fp = np.atleast_1d(fun(x + e)[0])
        fm = np.atleast_1d(fun(x - e)[0])
        fwd, bwd = (fp - f0) / h, (f0 - fm) / h
        central = (fp - fm) / (2 * h)
        smooth = np.abs(fwd - bwd) <= 1e-3 * np.maximum(1.0, np.abs(central))
        kinks += int((~smooth).sum())
        err = np.abs(J[:, j] - central) / np.maximum(1.0, np.abs(central))
        if smooth.any():
            worst = max(worst, float(err[smooth].max()))
    return worst, kinks


def brute_force_vertices(robot, world, path, params):
    """Independent re-implementation of the vertex filter with scalar calls."""
    out = set()
    for it in range(params.n_t + 1):
        e = ee_position(path, it / params.n_t)
        for ix in range(-params.half_x, params.half_x + 1):
            for iy in range(-params.half_y, params.half_y + 1):
                b = np.array([ix * params.dx, iy * params.dy])
                for w in (-1, 1):
                    d = math.dist((b[0], b[1], 0.0), e)
                    if d > robot.reach or d < robot.min_reach:
                        continue
                    try:
                        el = elbow_ik(robot, b, e, w)
                    except (Unreachable, DegenerateVertical):
                        continue
                    if not obs(world, robot, FullConfig(b, 0.0, el, np.asarray(e))):
                        out.add((ix, iy, it, w))
    return out
