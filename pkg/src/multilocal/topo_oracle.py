"""Ground-truth homotopy classes for planar projections of graph paths.

Valid only for scenes whose obstacles are vertical prisms that do not change
with ``t``: then a path through ``(x, y, t)`` is classified by its ``(x, y)``
projection alone.

Each obstacle gets an anchor point inside its footprint and a ray from that
anchor in the ``+y`` direction.  A path's signature is the sequence of rays it
crosses, signed by direction and freely reduced.  Letter ``+(j + 1)`` means the
ray of anchor ``j`` was crossed left to right, ``-(j + 1)`` right to left.
A point with ``x == anchor_x`` counts as right of the ray, which is the same as
nudging the ray an infinitesimal distance to the left.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, DegenerateCrossing


@dataclass(frozen=True)
class HSignature:
    """Freely reduced crossing word."""

    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "word", reduce_word(self.word))

    def inverse(self) -> "HSignature":
        return HSignature(tuple(-c for c in reversed(self.word)))

    def __mul__(self, other: "HSignature") -> "HSignature":
        return HSignature(self.word + other.word)

    def __str__(self):
        if not self.word:
            return "e"
        return " ".join(f"{'+' if c > 0 else '-'}{abs(c) - 1}" for c in self.word)


def reduce_word(word) -> tuple:
    out = []
    for c in word:
        c = int(c)
        if c == 0:
            raise ValueError("letter 0 is not allowed")
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def _append(word: tuple, letters) -> tuple:
    out = list(word)
    for c in letters:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def segment_crossings(p, q, anchors) -> list:
    """Signed ray letters crossed by the segment ``p -> q``, in travel order."""
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 2)
    hits = []
    for j, (ax, ay) in enumerate(anchors):
        if (p[0] == ax and p[1] == ay) or (q[0] == ax and q[1] == ay):
            raise DegenerateCrossing(f"path vertex coincides with anchor {j}")
        left_p, left_q = p[0] < ax, q[0] < ax
        if left_p == left_q:
            continue
        # interpolate from the left endpoint so reversing the segment gives bit-identical y
        a, b = (p, q) if left_p else (q, p)
        s = (ax - a[0]) / (b[0] - a[0])
        y = a[1] + s * (b[1] - a[1])
        if y == ay:
            raise DegenerateCrossing(f"segment passes through anchor {j}")
        if y > ay:
            hits.append((s if left_p else 1.0 - s, j + 1 if left_p else -(j + 1)))
    hits.sort()
    return [c for _, c in hits]


def h_signature(path2d, anchors) -> HSignature:
    """Signature of an ``(x, y)`` polyline with respect to the anchor rays."""
    pts = np.asarray(path2d, dtype=float).reshape(-1, 2)
    word = ()
    for p, q in zip(pts[:-1], pts[1:]):
        word = _append(word, segment_crossings(p, q, anchors))
    return HSignature(word)


def graph_path_signature(graph, ids, anchors) -> HSignature:
    """Signature of a configuration-graph vertex sequence projected to the base plane."""
    idx = np.asarray(ids, dtype=np.int64)
    return h_signature(np.asarray(graph.base)[idx, :2], anchors)


def enumerate_classes(graph, start: int, goal: int, anchors, cap: int = 60):
    """Brute-force class enumeration over every simple path from ``start`` to ``goal``.

    Returns
    -------
    dict
        ``{HSignature: (cost, vertex_ids)}`` holding the cheapest simple path
        of every class.  ``len()`` of it is the class count.

    Raises
    ------
    CapExceeded
        If the graph has more than ``cap`` vertices.
    """
    if len(graph) > cap:
        raise CapExceeded(f"graph has {len(graph)} vertices, cap is {cap}")
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 2)
    xy = np.asarray(graph.base)[:, :2]
    letters: dict = {}

    def cross(v, u):
        key = (v, u)
        if key not in letters:
            letters[key] = tuple(segment_crossings(xy[v], xy[u], anchors))
        return letters[key]

    best: dict = {}
    on_path = [False] * len(graph)
    path = [start]
    on_path[start] = True

    def dfs(v, word, cost):
        if v == goal:
            sig = HSignature(word)
            if sig not in best or cost < best[sig][0]:
                best[sig] = (cost, list(path))
            return
        for u, c in graph.neighbors(v):
            if on_path[u]:
                continue
            on_path[u] = True
            path.append(u)
            dfs(u, _append(word, cross(v, u)), cost + c)
            path.pop()
            on_path[u] = False

    dfs(start, (), 0.0)
    return best


def _edge_letters(graph, anchors) -> dict:
    """``{(v, u): letters}`` for every directed graph edge that crosses a ray."""
    xy = np.asarray(graph.base)[:, :2]
    indptr = np.asarray(graph.indptr)
    src = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    dst = np.asarray(graph.indices)
    p, q = xy[src], xy[dst]
    cand = np.zeros(len(src), dtype=bool)
    for ax, _ in anchors:
        cand |= (p[:, 0] < ax) != (q[:, 0] < ax)
    cand |= np.any(np.all(p[:, None, :] == anchors[None], axis=2), axis=1)
    out = {}
    for e in np.nonzero(cand)[0]:
        letters = segment_crossings(p[e], q[e], anchors)
        if letters:
            out[(int(src[e]), int(dst[e]))] = letters
    return out


def class_search(graph, start: int, goal: int, anchors, k: int, max_word: int = 8):
    """The ``k`` cheapest homotopy classes of walks from ``start`` to ``goal``.

    Dijkstra over ``(vertex, reduced crossing word)`` pairs, which is a search
    in a covering space of the projected free space.  The first time the goal
    pops with a new word, that word's cheapest walk has been found.  Words
    longer than ``max_word`` are pruned.  ``graph`` must carry CSR adjacency
    (``indptr``/``indices``) as :class:`~multilocal.cgraph.ConfigGraph` does.

    Returns a list of ``(HSignature, cost, vertex_ids)`` in cost order; it is
    shorter than ``k`` when fewer classes exist within the word bound.
    """
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 2)
    letters = _edge_letters(graph, anchors)
    dist = {(start, ()): 0.0}
    parent = {(start, ()): None}
    done = set()
    heap = [(0.0, 0, start, ())]
    counter = 0
    found = []
    while heap and len(found) < k:
        d, _, v, word = heapq.heappop(heap)
        key = (v, word)
        if key in done:
            continue
        done.add(key)
        if v == goal:
            ids = []
            cur = key
            while cur is not None:
                ids.append(cur[0])
                cur = parent[cur]
            found.append((HSignature(word), d, ids[::-1]))
        for u, c in graph.neighbors(v):
            cross = letters.get((v, u))
            nw = _append(word, cross) if cross else word
            if len(nw) > max_word:
                continue
            nk = (u, nw)
            nd = d + c
            if nk not in done and nd < dist.get(nk, np.inf):
                dist[nk] = nd
                parent[nk] = key
                counter += 1
                heapq.heappush(heap, (nd, counter, u, nw))
    return found
