"""Neighborhood-augmented graph search with parent sets.

The search is Dijkstra's algorithm in which a search vertex is a pair
(graph vertex, homotopy class).  Two search vertices on the same graph vertex
are merged when their parent sets touch: a parent set (PS) is the set of
search vertices linked to a vertex in the search graph ``(V_N, E_N)``.
Wavefronts that went around opposite sides of an obstacle never link, so when
they meet behind it the graph vertices there get one search vertex per side.

Two variants are provided:

``"modified"``
    Successors enter ``V_N`` (and get their parent edge) when they are
    generated.  Kept as a comparison baseline.
``"generalized"``
    Vertices enter ``V_N`` only when popped, successors equivalent to a known
    vertex are handled before genuinely new ones.  This is the default.

Merging relies on every small free cycle of the graph being a triangle, as in
King's-graph grids.  On a 4-connected grid the two routes around a single free
square never touch and are reported as different classes.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BrokenChain, Exhausted

MODIFIED = "modified"
GENERALIZED = "generalized"


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    Parameters
    ----------
    variant : {"generalized", "modified"}
    n_classes : int
        Number of distinct classes to collect at the goal.
    goal : "t1", int or iterable of int
        ``"t1"`` means every graph vertex with ``t = 1``; otherwise graph vertex ids.
    distinct_goal_positions_are_distinct_classes : bool
        When true, hits on different goal vertices always count as different
        classes.  When false they are compared with the parent-set relation
        regardless of which goal vertex they sit on.
    """

    variant: str = GENERALIZED
    n_classes: int = 1
    goal: object = "t1"
    distinct_goal_positions_are_distinct_classes: bool = True

    def __post_init__(self):
        if self.variant not in (MODIFIED, GENERALIZED):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")


@dataclass
class Nag:
    """Search graph ``G_N = (V_N, E_N)`` plus bookkeeping of one search run.

    Vertex ``i`` represents graph vertex ``cg[i]``.  ``nbrs[i]`` is its
    adjacency in ``E_N``; the start vertex carries a self-loop.  ``in_vn``
    flags membership in ``V_N`` (heap-only vertices of the generalized variant
    are known but not yet in ``V_N``).
    """

    start: int
    cg: list = field(default_factory=list)
    g: list = field(default_factory=list)
    came_from: list = field(default_factory=list)
    nbrs: list = field(default_factory=list)
    in_vn: list = field(default_factory=list)
    popped: list = field(default_factory=list)
    pop_order: list = field(default_factory=list)
    hits: list = field(default_factory=list)
    by_cg: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cg)

    def add_vertex(self, cg, g, came_from, in_vn):
        i = len(self.cg)
        self.cg.append(cg)
        self.g.append(g)
        self.came_from.append(came_from)
        self.nbrs.append(set())
        self.in_vn.append(in_vn)
        self.popped.append(False)
        self.by_cg.setdefault(cg, []).append(i)
        return i

    def link(self, a, b):
        self.nbrs[a].add(b)
        self.nbrs[b].add(a)

    @property
    def edges(self):
        """Undirected ``E_N`` as a sorted list of ``(a, b)`` with ``a <= b``."""
        return sorted({(min(a, b), max(a, b)) for a, s in enumerate(self.nbrs) for b in s})

    def parent_set(self, i) -> set:
        """Parent set used by the equivalence test.

        ``E_N`` neighbors of ``i``; a vertex waiting in the heap also counts
        its pending ``came_from`` link.
        """
        ps = set(self.nbrs[i])
        cf = self.came_from[i]
        if cf is not None:
            ps.add(cf)
        return ps

    def dump(self, fh) -> None:
        """One JSON record per search vertex."""
        for i in range(len(self)):
            fh.write(json.dumps({
                "id": i, "cg": self.cg[i], "g": self.g[i],
                "ps": sorted(self.parent_set(i)), "came_from": self.came_from[i],
                "in_vn": self.in_vn[i],
            }) + "\n")


def compute_ps(zeta: int, nag: Nag) -> set:
    """Parent set of ``zeta``: every search vertex adjacent to it in ``E_N``."""
    return set(nag.nbrs[zeta])


def _touch(ps1, ps2, nag) -> bool:
    """Whether two parent sets share a member or contain an ``E_N``-adjacent pair."""
    if not ps1.isdisjoint(ps2):
        return True
    small, big = (ps1, ps2) if len(ps1) <= len(ps2) else (ps2, ps1)
    return any(not nag.nbrs[p].isdisjoint(big) for p in small)


def equivalent(z1: int, z2: int, nag: Nag) -> bool:
    """Equivalence of two search vertices: same graph vertex and touching parent sets."""
    if z1 == z2:
        return True
    if nag.cg[z1] != nag.cg[z2]:
        return False
    return _touch(nag.parent_set(z1), nag.parent_set(z2), nag)


def _find_equivalent(nag: Nag, v: int, q: int, known_only_vn: bool):
    cands = nag.by_cg.get(q)
    if not cands:
        return None
    nv = nag.nbrs[v]
    nbrs, came_from, in_vn = nag.nbrs, nag.came_from, nag.in_vn
    for w in cands:
        if known_only_vn and not in_vn[w]:
            continue
        # the would-be successor of v has parent set {v}
        cf = came_from[w]
        if cf == v or cf in nv or v in nbrs[w] or not nv.isdisjoint(nbrs[w]):
            return w
    return None


def _goal_ids(graph, goal):
    if isinstance(goal, str):
        if goal != "t1":
            raise ValueError(f"unrecognized goal {goal!r}")
        return set(graph.ids_at_t(graph.params.n_t).tolist())
    if isinstance(goal, (int, np.integer)):
        return {int(goal)}
    return {int(g) for g in goal}


class _Hits:
    def __init__(self, nag, distinct_positions):
        self.nag = nag
        self.distinct_positions = distinct_positions

    def is_new(self, v):
        nag = self.nag
        for h in nag.hits:
            if nag.cg[h] != nag.cg[v]:
                if self.distinct_positions:
                    continue
                if _touch(nag.parent_set(h), nag.parent_set(v), nag):
                    return False
            elif equivalent(h, v, nag):
                return False
        return True


def search_nag(graph, start: int, cfg: SearchConfig, tie_rank=None,
               max_vertices: int | None = None) -> Nag:
    """Run the search from graph vertex ``start`` until ``cfg.n_classes`` goal classes pop.

    Parameters
    ----------
    graph
        Anything exposing ``neighbors(i) -> [(j, cost), ...]`` (and
        ``ids_at_t``/``params`` when the goal is ``"t1"``).
    tie_rank : mapping or callable, optional
        Secondary heap key per graph vertex; default is the graph vertex id.
        Equal-cost pops are ordered by ``(tie_rank[cg], insertion counter)``.
    max_vertices : int, optional
        Abort once the search graph holds this many vertices.  The modified
        variant can keep spawning spurious classes on some graphs, so tests and
        comparisons run it with a cap.

    Raises
    ------
    Exhausted
        If the heap empties (or ``max_vertices`` is hit) first; the partial
        :class:`Nag` rides on the exception and ``exc.truncated`` tells the
        two cases apart.
    """
    if tie_rank is None:
        rank = int
    elif callable(tie_rank):
        rank = tie_rank
    else:
        rank = tie_rank.__getitem__
    goal = _goal_ids(graph, cfg.goal)
    generalized = cfg.variant == GENERALIZED

    nag = Nag(start=0)
    s = nag.add_vertex(int(start), 0.0, None, True)
    nag.link(s, s)  # self-reference
    hits = _Hits(nag, cfg.distinct_goal_positions_are_distinct_classes)
    counter = 0
    heap = [(0.0, rank(int(start)), counter, s)]

    def push(i):
        nonlocal counter
        counter += 1
        heapq.heappush(heap, (nag.g[i], rank(nag.cg[i]), counter, i))

    while heap:
        if max_vertices is not None and len(nag) >= max_vertices:
            exc = Exhausted(len(nag.hits), nag=nag, hits=nag.hits)
            exc.truncated = True
            raise exc
        gv, _, _, v = heapq.heappop(heap)
        if nag.popped[v] or gv != nag.g[v]:
            continue
        nag.popped[v] = True
        nag.pop_order.append(v)
        q = nag.cg[v]
        if generalized:
            nag.in_vn[v] = True
            if nag.came_from[v] is not None:
                nag.link(v, nag.came_from[v])

        if q in goal and hits.is_new(v):
            nag.hits.append(v)
            if len(nag.hits) >= cfg.n_classes:
                return nag

        if generalized:
            pending = list(graph.neighbors(q))
            progress = True
            while progress and pending:
                progress = False
                rest = []
                for qn, c in pending:
                    w = _find_equivalent(nag, v, qn, known_only_vn=False)
                    if w is None:
                        rest.append((qn, c))
                        continue
                    progress = True
                    nag.link(v, w)
                    g_new = gv + c
                    if g_new < nag.g[w] and not nag.popped[w]:
                        nag.g[w] = g_new
                        nag.came_from[w] = v
                        push(w)
                pending = rest
            for qn, c in pending:
                w = nag.add_vertex(qn, gv + c, v, False)
                push(w)
        else:
            for qn, c in graph.neighbors(q):
                g_new = gv + c
                w = _find_equivalent(nag, v, qn, known_only_vn=True)
                if w is None:
                    w = nag.add_vertex(qn, g_new, v, True)
                    nag.link(v, w)
                    push(w)
                else:
                    nag.link(v, w)
                    if g_new < nag.g[w] and not nag.popped[w]:
                        nag.g[w] = g_new
                        nag.came_from[w] = v
                        push(w)
    exc = Exhausted(len(nag.hits), nag=nag, hits=nag.hits)
    exc.truncated = False
    raise exc


def extract_paths(nag: Nag, goal_hits) -> list:
    """Graph-vertex sequences from the start to each hit, following ``came_from``."""
    paths = []
    for h in goal_hits:
        chain = [h]
        seen = {h}
        cur = h
        while cur != nag.start:
            nxt = nag.came_from[cur]
            if nxt is None or nxt in seen:
                raise BrokenChain(f"came_from chain from search vertex {h} breaks at {cur}")
            chain.append(nxt)
            seen.add(nxt)
            cur = nxt
        paths.append([nag.cg[i] for i in reversed(chain)])
    return paths


class Guess(NamedTuple):
    """An initial guess extracted from one search class."""

    base: np.ndarray
    elbow: np.ndarray
    t: np.ndarray
    w: np.ndarray
    cg_ids: list
    cost: float


def guesses_from_nag(graph, nag: Nag) -> list:
    out = []
    for h, ids in zip(nag.hits, extract_paths(nag, nag.hits)):
        idx = np.array(ids, dtype=np.int64)
        out.append(Guess(base=np.array(graph.base[idx]), elbow=np.array(graph.elbow[idx]),
                         t=np.array(graph.t[idx]), w=np.array(graph.w[idx]),
                         cg_ids=list(ids), cost=float(nag.g[h])))
    return out


def modified_nags(graph, start: int, cfg: SearchConfig, tie_rank=None) -> list:
    """Search and convert each class into base, elbow and path-parameter sequences.

    Raises :class:`Exhausted` (with the partial guesses in ``exc.guesses``)
    when fewer than ``cfg.n_classes`` classes exist.
    """
    try:
        nag = search_nag(graph, start, cfg, tie_rank=tie_rank)
    except Exhausted as exc:
        exc.guesses = guesses_from_nag(graph, exc.nag)
        raise
    return guesses_from_nag(graph, nag)
