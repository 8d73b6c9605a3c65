"""Top-down SVG 1.1 plots of planned motions.

Obstacle footprints are grey, the desired end-effector path blue, the elbow
path green and the base path red.  Coordinates are printed with a fixed
number of decimals so identical inputs give identical bytes.
"""

from __future__ import annotations

import os

import numpy as np

from .world import Box, Sphere

SIZE = 600
_PAD = 0.1

COLORS = {"obstacle": "#9e9e9e", "ee": "#1f5fd6", "elbow": "#1e9e3a", "base": "#d62728"}


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


class _Canvas:
    def __init__(self, lo, hi):
        span = max(hi[0] - lo[0], hi[1] - lo[1])
        self.scale = SIZE / span
        self.lo, self.hi = lo, hi
        self.width = (hi[0] - lo[0]) * self.scale
        self.height = (hi[1] - lo[1]) * self.scale
        self.items = []

    def xy(self, p):
        # svg y grows downward
        return (p[0] - self.lo[0]) * self.scale, (self.hi[1] - p[1]) * self.scale

    def polyline(self, pts, color, width=2.0, opacity=1.0):
        pts = np.asarray(pts, dtype=float)
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in map(self.xy, pts))
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{_fmt(width)}" stroke-opacity="{_fmt(opacity)}"/>')
        x, y = self.xy(pts[0])
        self.items.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.000" fill="{color}" '
                          f'fill-opacity="{_fmt(opacity)}"/>')

    def obstacle(self, ob):
        c = COLORS["obstacle"]
        if isinstance(ob, Sphere):
            x, y = self.xy(ob.center[:2])
            self.items.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" '
                              f'r="{_fmt(ob.radius * self.scale)}" fill="{c}"/>')
        elif isinstance(ob, Box):
            x, y = self.xy((ob.min[0], ob.max[1]))
            self.items.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" '
                              f'width="{_fmt((ob.max[0] - ob.min[0]) * self.scale)}" '
                              f'height="{_fmt((ob.max[1] - ob.min[1]) * self.scale)}" fill="{c}"/>')

    def text(self, s):
        self.items.append(f'<text x="8.000" y="18.000" font-family="monospace" '
                          f'font-size="13">{s}</text>')

    def render(self) -> str:
        head = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
                '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
                f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n'
                f'<rect x="0" y="0" width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
                'fill="white"/>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def _bounds(world, arrays):
    lo = np.array([-world.x_max, -world.y_max])
    hi = np.array([world.x_max, world.y_max])
    for a in arrays:
        a = np.asarray(a, dtype=float)[:, :2]
        lo = np.minimum(lo, a.min(axis=0))
        hi = np.maximum(hi, a.max(axis=0))
    for ob in world.obstacles:
        if isinstance(ob, Sphere):
            c = np.array(ob.center[:2])
            lo, hi = np.minimum(lo, c - ob.radius), np.maximum(hi, c + ob.radius)
        else:
            lo, hi = np.minimum(lo, ob.min[:2]), np.maximum(hi, ob.max[:2])
    pad = _PAD * max(hi - lo)
    return lo - pad, hi + pad


def render_svg(world, paths, ee=None, title="") -> str:
    """SVG text for a list of ``(base, elbow)`` xy arrays and an optional ee polyline."""
    arrays = [a for bp in paths for a in bp] + ([] if ee is None else [ee])
    canvas = _Canvas(*_bounds(world, arrays))
    for ob in world.obstacles:
        canvas.obstacle(ob)
    if ee is not None:
        canvas.polyline(ee, COLORS["ee"], width=3.0)
    opacity = 1.0 if len(paths) == 1 else 0.7
    for base, elbow in paths:
        canvas.polyline(elbow, COLORS["elbow"], opacity=opacity)
        canvas.polyline(base, COLORS["base"], opacity=opacity)
    if title:
        canvas.text(title)
    return canvas.render()


def plot_svg(result, world, out_dir, ee=None) -> list:
    """Write ``guess_<i>.svg`` per guess and ``overlay.svg``; returns the written paths.

    Solved guesses show their optimized trajectory, unsolved ones their raw
    graph path.  ``ee`` is an optional ``(N, 3)`` array of desired ee points.
    """
    if not result.guesses:
        raise ValueError("nothing to plot: the result has no guesses")
    os.makedirs(out_dir, exist_ok=True)
    paths, written = [], []
    for i, g in enumerate(result.guesses):
        if i < len(result.outcomes):
            o = result.outcomes[i]
            bp = (o.trajectory.base, o.trajectory.elbow)
            status = "converged" if o.converged else "failed"
            title = f"class {i + 1}: {status}, cost {o.report.cost:.4f}"
        else:
            bp = (g.base, g.elbow)
            title = f"class {i + 1}: graph path, cost {g.cost:.4f}"
        paths.append(bp)
        written.append(os.path.join(out_dir, f"guess_{i}.svg"))
        _write(written[-1], render_svg(world, [bp], ee, title))
    written.append(os.path.join(out_dir, "overlay.svg"))
    best = "" if result.best_index is None else f"best: class {result.best_index + 1}"
    _write(written[-1], render_svg(world, paths, ee, best))
    return written


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
