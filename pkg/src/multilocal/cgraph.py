"""Discrete configuration graph over reduced coordinates ``(x, y, t, w)``.

Vertices sit on a regular grid in ``(x, y, t)`` for each elbow branch ``w``.
A vertex is kept when the arm can reach the end-effector point at its ``t``
and the resulting pose is collision-free.  Edges follow a 3D King's graph
stencil; edges that switch elbow branch are only allowed near full arm
extension, where the two branches meet.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGraph
from .model import EePath, FullConfig, ReducedConfig, RobotModel, elbow_ik_batch, ee_position
from .world import SUBSAMPLE_STEP, World, clearance_batch, collides_batch

_CHUNK = 400_000
_CLEAR_SLACK = 1e-6


@dataclass(frozen=True)
class GridParams:
    """Grid resolution and base-position bounds.

    ``t_scale`` multiplies the ``t`` component of edge costs and
    ``epsilon_flip`` is added to edges that switch elbow branch; the defaults
    give the plain Euclidean cost in ``(x, y, t)``.
    """

    dx: float
    dy: float
    dt: float
    x_max: float
    y_max: float
    t_scale: float = 1.0
    epsilon_flip: float = 0.0
    subsample: float = SUBSAMPLE_STEP

    def __post_init__(self):
        for name in ("dx", "dy", "dt", "x_max", "y_max", "subsample"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        inv = 1.0 / self.dt
        if abs(inv - round(inv)) > 1e-9:
            raise ValueError(f"1/dt must be an integer, got 1/{self.dt} = {inv}")
        if self.t_scale < 0 or self.epsilon_flip < 0:
            raise ValueError("t_scale and epsilon_flip must be >= 0")

    @property
    def n_t(self) -> int:
        """Number of t intervals; t indices run over ``0..n_t``."""
        return int(round(1.0 / self.dt))

    @property
    def half_x(self) -> int:
        return int(math.floor(self.x_max / self.dx + 1e-9))

    @property
    def half_y(self) -> int:
        return int(math.floor(self.y_max / self.dy + 1e-9))

    def t_of(self, it):
        return np.asarray(it) / self.n_t

    def band_width(self) -> float:
        """Width of the near-full-extension band where branch switches are allowed."""
        return max(self.dx, self.dy) * math.sqrt(2.0)


@dataclass(frozen=True)
class CgVertex:
    ix: int
    iy: int
    it: int
    w: int


def kgc(v1: CgVertex, v2: CgVertex) -> bool:
    """King's graph condition: every grid index differs by at most one."""
    return abs(v1.ix - v2.ix) <= 1 and abs(v1.iy - v2.iy) <= 1 and abs(v1.it - v2.it) <= 1


def edge_cost(params: GridParams, v1: CgVertex, v2: CgVertex) -> float:
    """Euclidean distance in ``(x, y, t)`` (plus the optional branch-flip penalty)."""
    ddx = (v2.ix - v1.ix) * params.dx
    ddy = (v2.iy - v1.iy) * params.dy
    ddt = (v2.it - v1.it) * params.dt * params.t_scale
    c = math.sqrt(ddx * ddx + ddy * ddy + ddt * ddt)
    if v1.w != v2.w:
        c += params.epsilon_flip
    return c


class ConfigGraph:
    """Immutable configuration graph with CSR adjacency.

    Vertex ids are assigned in ``(it, iy, ix, w)`` lexicographic order.
    """

    def __init__(self, robot, world, path, params, ix, iy, it, w, base, elbow, ee, edges, costs):
        self.robot = robot
        self.world = world
        self.path = path
        self.params = params
        self.ix, self.iy, self.it, self.w = ix, iy, it, w
        self.base, self.elbow, self.ee = base, elbow, ee
        self.t = params.t_of(it)
        self.reach_dist = np.hypot(np.hypot(base[:, 0] - ee[:, 0], base[:, 1] - ee[:, 1]), ee[:, 2])
        for arr in (ix, iy, it, w, base, elbow, ee, self.t, self.reach_dist):
            arr.setflags(write=False)
        self._lookup = {key: i for i, key in enumerate(zip(ix.tolist(), iy.tolist(),
                                                             it.tolist(), w.tolist()))}

        n = len(ix)
        if len(edges):
            src = np.concatenate([edges[:, 0], edges[:, 1]])
            dst = np.concatenate([edges[:, 1], edges[:, 0]])
            cst = np.concatenate([costs, costs])
            order = np.lexsort((dst, src))
            src, dst, cst = src[order], dst[order], cst[order]
        else:
            src = dst = np.zeros(0, dtype=np.int64)
            cst = np.zeros(0)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.indptr, src + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.indices = dst.astype(np.int64)
        self.costs = cst.astype(float)
        for arr in (self.indptr, self.indices, self.costs):
            arr.setflags(write=False)
        # plain-Python adjacency for the search inner loop
        self._adj = [list(zip(self.indices[self.indptr[i]:self.indptr[i + 1]].tolist(),
                              self.costs[self.indptr[i]:self.indptr[i + 1]].tolist()))
                     for i in range(n)]

    def __len__(self):
        return len(self.ix)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def vertex(self, i: int) -> CgVertex:
        return CgVertex(int(self.ix[i]), int(self.iy[i]), int(self.it[i]), int(self.w[i]))

    def index(self, v: CgVertex) -> int:
        """Vertex id of ``v``; raises ``KeyError`` if it was filtered out."""
        return self._lookup[(v.ix, v.iy, v.it, v.w)]

    def __contains__(self, v: CgVertex) -> bool:
        return (v.ix, v.iy, v.it, v.w) in self._lookup

    def find(self, x: float, y: float, t: float, w: int) -> int:
        """Vertex id of the grid point nearest to ``(x, y, t)`` on branch ``w``."""
        p = self.params
        key = (int(round(x / p.dx)), int(round(y / p.dy)), int(round(t * p.n_t)), int(w))
        try:
            return self._lookup[key]
        except KeyError:
            raise KeyError(f"no graph vertex at x={x}, y={y}, t={t}, w={w}") from None

    def neighbors(self, i: int):
        """List of ``(neighbor id, cost)`` pairs sorted by neighbor id."""
        return self._adj[i]

    def coords(self, i: int):
        return float(self.ix[i] * self.params.dx), float(self.iy[i] * self.params.dy), float(self.t[i])

    def reduced(self, i: int) -> ReducedConfig:
        x, y, t = self.coords(i)
        return ReducedConfig(x, y, t, int(self.w[i]))

    def full(self, i: int, heading: float = 0.0) -> FullConfig:
        return FullConfig(base=np.array(self.base[i]), heading=heading,
                          elbow=np.array(self.elbow[i]), ee=np.array(self.ee[i]))

    def ids_at_t(self, it: int) -> np.ndarray:
        return np.nonzero(self.it == it)[0]

    def dump(self, fh) -> None:
        """Write one adjacency record per vertex as plain text."""
        fh.write("# id ix iy it w x y t | neighbor:cost ...\n")
        for i in range(len(self)):
            x, y, t = self.coords(i)
            nbrs = " ".join(f"{j}:{c!r}" for j, c in self._adj[i])
            fh.write(f"{i} {self.ix[i]} {self.iy[i]} {self.it[i]} {self.w[i]} "
                     f"{x!r} {y!r} {t!r} | {nbrs}\n")


def _stencil(include_zero: bool):
    offs = [o for o in itertools.product((-1, 0, 1), repeat=3) if include_zero or o != (0, 0, 0)]
    return offs


def _half_stencil():
    """One representative of each +-pair of non-zero King's graph offsets."""
    return [o for o in _stencil(False) if o > (0, 0, 0)]


def build_graph(world: World, robot: RobotModel, path: EePath, params: GridParams) -> ConfigGraph:
    """Discretize the reduced configuration space and connect it.

    Raises
    ------
    EmptyGraph
        If no vertex survives filtering at ``t = 0`` or at ``t = 1``.
    """
    hx, hy, nt = params.half_x, params.half_y, params.n_t
    gx = np.arange(-hx, hx + 1)
    gy = np.arange(-hy, hy + 1)
    GY, GX = np.meshgrid(gy, gx, indexing="ij")
    flat_ix, flat_iy = GX.ravel(), GY.ravel()
    bxy = np.stack([flat_ix * params.dx, flat_iy * params.dy], axis=1)

    cols = {k: [] for k in ("ix", "iy", "it", "w", "base", "elbow", "ee")}
    for it in range(nt + 1):
        e = ee_position(path, it / nt)
        ee_rep = np.broadcast_to(e, (len(bxy), 3))
        per_w = []
        for w in (-1, 1):
            elbow, ok = elbow_ik_batch(robot, bxy, ee_rep, np.full(len(bxy), w))
            keep = ok.copy()
            if keep.any():
                sel = np.nonzero(keep)[0]
                hit = collides_batch(world, robot, bxy[sel], elbow[sel], ee_rep[sel])
                keep[sel[hit]] = False
            per_w.append((keep, elbow))
        # interleave branches so that ids follow (it, iy, ix, w)
        keep_m, elb_m = per_w[0]
        keep_p, elb_p = per_w[1]
        both = np.stack([keep_m, keep_p], axis=1).ravel()
        cell_idx = np.repeat(np.arange(len(bxy)), 2)[both]
        w_arr = np.tile([-1, 1], len(bxy))[both]
        elb = np.where((w_arr == -1)[:, None], elb_m[cell_idx], elb_p[cell_idx])
        cols["ix"].append(flat_ix[cell_idx])
        cols["iy"].append(flat_iy[cell_idx])
        cols["it"].append(np.full(len(cell_idx), it))
        cols["w"].append(w_arr)
        cols["base"].append(bxy[cell_idx])
        cols["elbow"].append(elb)
        cols["ee"].append(np.broadcast_to(e, (len(cell_idx), 3)))

    ix = np.concatenate(cols["ix"]).astype(np.int64)
    iy = np.concatenate(cols["iy"]).astype(np.int64)
    it_arr = np.concatenate(cols["it"]).astype(np.int64)
    w_arr = np.concatenate(cols["w"]).astype(np.int64)
    base = np.concatenate(cols["base"]).reshape(-1, 2)
    elbow = np.concatenate(cols["elbow"]).reshape(-1, 3)
    ee = np.concatenate(cols["ee"]).reshape(-1, 3)

    if not np.any(it_arr == 0) or not np.any(it_arr == nt):
        raise EmptyGraph("no collision-free reachable vertex at t=0 or t=1")

    dense = np.full((nt + 1, 2 * hy + 1, 2 * hx + 1, 2), -1, dtype=np.int64)
    dense[it_arr, iy + hy, ix + hx, (w_arr + 1) // 2] = np.arange(len(ix))
    reach_d = np.hypot(np.hypot(base[:, 0] - ee[:, 0], base[:, 1] - ee[:, 1]), ee[:, 2])
    in_band = reach_d >= robot.reach - params.band_width()
    clear = _min_clearance(world, robot, base, elbow, ee)

    edges, costs = [], []
    for off, (w1, w2) in _edge_groups():
        src, dst = _pairs(dense, off, w1, w2, hx, hy, nt)
        if len(src) == 0:
            continue
        if w1 != w2:
            m = in_band[src] & in_band[dst]
            src, dst = src[m], dst[m]
            if len(src) == 0:
                continue
        free = _segments_free(world, robot, params, base, elbow, ee, src, dst, clear)
        src, dst = src[free], dst[free]
        c = np.sqrt((off[0] * params.dx) ** 2 + (off[1] * params.dy) ** 2
                    + (off[2] * params.dt * params.t_scale) ** 2)
        if w1 != w2:
            c += params.epsilon_flip
        edges.append(np.stack([src, dst], axis=1))
        costs.append(np.full(len(src), c))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    costs = np.concatenate(costs) if costs else np.zeros(0)
    return ConfigGraph(robot, world, path, params, ix, iy, it_arr, w_arr, base, elbow, ee,
                       edges, costs)


def _edge_groups():
    for off in _half_stencil():
        for w in (-1, 1):
            yield off, (w, w)
    # branch switches: every offset including the pure flip, oriented w=-1 -> w=+1
    for off in _stencil(True):
        yield off, (-1, 1)


def _pairs(dense, off, w1, w2, hx, hy, nt):
    ddx, ddy, ddt = off
    shape = dense.shape
    sl_src, sl_dst = [], []
    for d, n in ((ddt, shape[0]), (ddy, shape[1]), (ddx, shape[2])):
        if d >= 0:
            sl_src.append(slice(0, n - d))
            sl_dst.append(slice(d, n))
        else:
            sl_src.append(slice(-d, n))
            sl_dst.append(slice(0, n + d))
    a = dense[tuple(sl_src) + ((w1 + 1) // 2,)].ravel()
    b = dense[tuple(sl_dst) + ((w2 + 1) // 2,)].ravel()
    m = (a >= 0) & (b >= 0)
    return a[m], b[m]


def _min_clearance(world, robot, base, elbow, ee):
    """Smallest capsule-obstacle clearance per vertex (``inf`` in an empty world)."""
    out = np.full(len(base), np.inf)
    for start in range(0, len(base), _CHUNK // 8):
        sl = slice(start, start + _CHUNK // 8)
        c = clearance_batch(world, robot, base[sl], elbow[sl], ee[sl])
        if c.size:
            out[sl] = c.min(axis=(0, 2))
    return out


def _segments_free(world, robot, params, base, elbow, ee, src, dst, clear):
    """Interior-sample collision check for each candidate edge (endpoints are free).

    No point of the interpolated robot moves farther than ``motion`` (the
    largest endpoint displacement), so an edge whose endpoint clearances sum to
    more than ``motion`` is free along its whole length and needs no sampling.
    """
    free = np.ones(len(src), dtype=bool)
    if not world.obstacles:
        return free
    motion = np.max(np.stack([
        np.linalg.norm(base[dst] - base[src], axis=1),
        np.linalg.norm(elbow[dst] - elbow[src], axis=1),
        np.linalg.norm(ee[dst] - ee[src], axis=1),
    ]), axis=0)
    sub = np.maximum(1, np.ceil(motion / params.subsample - 1e-12).astype(np.int64))
    # slack covers the golden-section tolerance of the clearance values
    sub[clear[src] + clear[dst] > motion + _CLEAR_SLACK] = 1
    for s in np.unique(sub):
        if s < 2:
            continue
        idx = np.nonzero(sub == s)[0]
        alphas = np.arange(1, s) / s
        per_chunk = max(1, _CHUNK // len(alphas))
        for start in range(0, len(idx), per_chunk):
            chunk = idx[start:start + per_chunk]
            u, v = src[chunk], dst[chunk]
            al = alphas[None, :, None]
            b = ((1 - al) * base[u][:, None, :] + al * base[v][:, None, :]).reshape(-1, 2)
            e = ((1 - al) * elbow[u][:, None, :] + al * elbow[v][:, None, :]).reshape(-1, 3)
            x = ((1 - al) * ee[u][:, None, :] + al * ee[v][:, None, :]).reshape(-1, 3)
            hit = collides_batch(world, robot, b, e, x).reshape(len(chunk), len(alphas))
            free[chunk] = ~hit.any(axis=1)
    return free


def edge_allowed(graph: ConfigGraph, v1: CgVertex, v2: CgVertex) -> bool:
    """Recompute from scratch whether ``v1`` and ``v2`` may be connected.

    This is the scalar reference used by tests; :func:`build_graph` applies the
    same rules in vectorized form.
    """
    from .world import seg_obs, default_subdivisions

    if v1 == v2 or not kgc(v1, v2):
        return False
    if v1 not in graph or v2 not in graph:
        return False
    i, j = graph.index(v1), graph.index(v2)
    if v1.w != v2.w:
        band = graph.robot.reach - graph.params.band_width()
        if graph.reach_dist[i] < band or graph.reach_dist[j] < band:
            return False
    q1, q2 = graph.full(i), graph.full(j)
    sub = default_subdivisions(q1, q2, graph.params.subsample)
    return not seg_obs(graph.world, graph.robot, q1, q2, sub)
