"""Obstacles, robot collision geometry and collision predicates.

The robot is approximated by three capsules: the base column, the upper arm
and the forearm.  The base column is a vertical cylinder, so collision results
do not depend on the base heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .model import FullConfig, RobotModel

#: default interpolation step for edge collision checks (m of configuration motion)
SUBSAMPLE_STEP = 0.01


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class Box:
    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(c) for c in self.min)
        hi = tuple(float(c) for c in self.max)
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box min must be < max componentwise, got {lo} / {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)


@dataclass(frozen=True)
class World:
    """Obstacle list plus the base-position bounds ``[-x_max, x_max] x [-y_max, y_max]``."""

    obstacles: tuple = ()
    x_max: float = 1.0
    y_max: float = 1.0

    def __post_init__(self):
        if not self.x_max > 0 or not self.y_max > 0:
            raise ValueError("x_max and y_max must be > 0")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for ob in self.obstacles:
            if not isinstance(ob, (Sphere, Box)):
                raise TypeError(f"unsupported obstacle {ob!r}")

    def anchors(self) -> np.ndarray:
        """One representative xy point per obstacle (footprint center)."""
        pts = []
        for ob in self.obstacles:
            if isinstance(ob, Sphere):
                pts.append(ob.center[:2])
            else:
                pts.append(((ob.min[0] + ob.max[0]) / 2, (ob.min[1] + ob.max[1]) / 2))
        return np.array(pts, dtype=float).reshape(-1, 2)


def capsules(robot: RobotModel, base, elbow, ee):
    """Capsule endpoints and radii for arrays of configurations.

    Returns ``(A, B, radii)`` where ``A`` and ``B`` have shape ``(3, N, 3)``
    (base column, upper arm, forearm) and ``radii`` has shape ``(3,)``.
    """
    base = np.atleast_2d(np.asarray(base, dtype=float))
    elbow = np.atleast_2d(np.asarray(elbow, dtype=float))
    ee = np.atleast_2d(np.asarray(ee, dtype=float))
    n = len(base)
    shoulder = np.zeros((n, 3))
    shoulder[:, :2] = base[:, :2]
    foot = shoulder.copy()
    foot[:, 2] = -robot.base_depth
    A = np.stack([foot, shoulder, elbow])
    B = np.stack([shoulder, elbow, ee])
    radii = np.array([robot.base_radius, robot.arm_radius, robot.arm_radius])
    return A, B, radii


def clearance_batch(world: World, robot: RobotModel, base, elbow, ee):
    """Signed clearances with shape ``(3, N, n_obstacles)``.

    Entry ``[c, i, j]`` is the distance between capsule ``c`` of configuration
    ``i`` and obstacle ``j`` minus the capsule radius.
    """
    A, B, radii = capsules(robot, base, elbow, ee)
    n = A.shape[1]
    out = np.empty((3, n, len(world.obstacles)))
    for j, ob in enumerate(world.obstacles):
        if isinstance(ob, Sphere):
            d, _, _ = geometry.point_segment(np.array(ob.center), A, B)
            out[:, :, j] = d - ob.radius
        else:
            d, _ = geometry.segment_box(A, B, np.array(ob.min), np.array(ob.max))
            out[:, :, j] = d
    return out - radii[:, None, None]


def collides_batch(world: World, robot: RobotModel, base, elbow, ee) -> np.ndarray:
    """Boolean collision flag per configuration (vectorized :func:`obs`)."""
    base = np.atleast_2d(np.asarray(base, dtype=float))
    n = len(base)
    hit = np.zeros(n, dtype=bool)
    if not world.obstacles or n == 0:
        return hit
    A, B, radii = capsules(robot, base, elbow, ee)
    mid = 0.5 * (A + B)
    half = 0.5 * np.linalg.norm(B - A, axis=-1)
    for ob in world.obstacles:
        if isinstance(ob, Sphere):
            c = np.array(ob.center)
            d, _, _ = geometry.point_segment(c, A, B)
            hit |= np.any(d - ob.radius - radii[:, None] < 0, axis=0)
            continue
        lo, hi = np.array(ob.min), np.array(ob.max)
        # cheap bounding-sphere rejection before the exact convex search
        near = geometry.box_sd(mid, lo, hi) - half - radii[:, None] < 0
        near &= ~hit[None, :]
        if not near.any():
            continue
        ci, ni = np.nonzero(near)
        d, _ = geometry.segment_box(A[ci, ni], B[ci, ni], lo, hi)
        bad = d - radii[ci] < 0
        hit[ni[bad]] = True
    return hit


def obs(world: World, robot: RobotModel, q: FullConfig) -> bool:
    """True iff configuration ``q`` collides with any obstacle."""
    return bool(collides_batch(world, robot, q.base[None, :], q.elbow[None, :], q.ee[None, :])[0])


def signed_clearance(world: World, robot: RobotModel, q: FullConfig) -> list:
    """Capsule-to-obstacle clearances, capsules major and obstacles minor.

    Negative values mean penetration.
    """
    c = clearance_batch(world, robot, q.base[None, :], q.elbow[None, :], q.ee[None, :])
    return [float(v) for v in c[:, 0, :].ravel()]


def default_subdivisions(q1: FullConfig, q2: FullConfig, step: float = SUBSAMPLE_STEP) -> int:
    """Number of interpolation intervals keeping every point's motion below ``step``."""
    motion = max(np.linalg.norm(q2.base - q1.base),
                 np.linalg.norm(q2.elbow - q1.elbow),
                 np.linalg.norm(q2.ee - q1.ee))
    return max(1, math.ceil(motion / step - 1e-12))


def seg_obs(world: World, robot: RobotModel, q1: FullConfig, q2: FullConfig,
            sub: int | None = None) -> bool:
    """True iff any of ``sub + 1`` evenly interpolated poses between q1 and q2 collides.

    Base, elbow and end effector are interpolated independently; the heading
    is ignored because the collision geometry is rotationally symmetric.
    """
    if sub is None:
        sub = default_subdivisions(q1, q2)
    if sub < 1:
        raise ValueError("sub must be >= 1")
    alpha = np.linspace(0.0, 1.0, sub + 1)[:, None]
    base = (1 - alpha) * q1.base + alpha * q2.base
    elbow = (1 - alpha) * q1.elbow + alpha * q2.elbow
    ee = (1 - alpha) * q1.ee + alpha * q2.ee
    return bool(collides_batch(world, robot, base, elbow, ee).any())
