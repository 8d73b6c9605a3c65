"""Kinematics of a two-link arm mounted on a differential-drive base.

World ``z = 0`` is the shoulder plane: the shoulder sits at ``[x, y, 0]``
directly above the base position ``(x, y)``.  Given the base position and an
end-effector point there are (at most) two elbow placements in the vertical
plane through shoulder and end effector, selected by the branch ``w``
(``+1`` elbow up, ``-1`` elbow down).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVertical, OutOfRange, Unreachable

#: horizontal shoulder-to-end-effector distance below which the arm plane is undefined
VERTICAL_EPS = 1e-12
#: slack on the reach bounds so that grid points exactly at full extension stay reachable
REACH_EPS = 1e-12


@dataclass(frozen=True)
class RobotModel:
    """Link lengths and collision radii of the simplified mobile manipulator.

    Parameters
    ----------
    l1, l2 : float
        Upper-arm and forearm lengths (m).
    arm_radius : float
        Capsule radius used for both links.
    base_radius : float
        Radius of the base column.
    base_depth : float
        How far the base column extends below the shoulder plane.
    """

    l1: float
    l2: float
    arm_radius: float = 0.0
    base_radius: float = 0.0
    base_depth: float = 0.0

    def __post_init__(self):
        if not self.l1 > 0:
            raise ValueError(f"l1 must be > 0, got {self.l1}")
        if not self.l2 > 0:
            raise ValueError(f"l2 must be > 0, got {self.l2}")
        for name in ("arm_radius", "base_radius", "base_depth"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def reach(self) -> float:
        return self.l1 + self.l2

    @property
    def min_reach(self) -> float:
        return abs(self.l1 - self.l2)


@dataclass(frozen=True)
class ReducedConfig:
    """Low-dimensional configuration ``(x, y, t, w)`` used by the graph search."""

    x: float
    y: float
    t: float
    w: int

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {self.t}")
        if self.w not in (-1, 1):
            raise ValueError(f"w must be -1 or +1, got {self.w}")


@dataclass(frozen=True)
class FullConfig:
    """Full robot configuration: base position, heading, elbow and end effector."""

    base: np.ndarray
    heading: float
    elbow: np.ndarray
    ee: np.ndarray

    @property
    def shoulder(self) -> np.ndarray:
        return np.array([self.base[0], self.base[1], 0.0])


@dataclass(frozen=True)
class EePath:
    """Piecewise-linear desired end-effector path ``x_e(t)`` on ``t in [0, 1]``.

    ``t`` must start at 0, end at 1 and be strictly increasing.
    """

    t: np.ndarray
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("an end-effector path needs at least 2 samples")
        if p.shape != (len(t), 3):
            raise ValueError(f"points must have shape ({len(t)}, 3), got {p.shape}")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("path parameter must start at 0 and end at 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("path parameter must be strictly increasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", p)

    @classmethod
    def from_samples(cls, samples) -> "EePath":
        """Build from ``[(t, (x, y, z)), ...]`` or ``[[t, x, y, z], ...]``."""
        ts, ps = [], []
        for s in samples:
            if len(s) == 2:
                ts.append(s[0])
                ps.append(s[1])
            else:
                ts.append(s[0])
                ps.append(s[1:4])
        return cls(np.array(ts, dtype=float), np.array(ps, dtype=float))

    def __call__(self, t):
        return ee_position(self, t)


def ee_position(path: EePath, t):
    """Evaluate the end-effector path at ``t`` (scalar or array).

    Raises
    ------
    OutOfRange
        If any ``t`` lies outside ``[0, 1]``.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0.0) or np.any(tt > 1.0) or np.any(np.isnan(tt)):
        raise OutOfRange(f"path parameter out of [0, 1]: {t}")
    out = np.stack([np.interp(tt, path.t, path.points[:, j]) for j in range(3)], axis=-1)
    return out


def reach_feasible(robot: RobotModel, base, ee) -> bool:
    """Whether the shoulder above ``base`` can reach ``ee``."""
    d = np.linalg.norm(np.array([base[0], base[1], 0.0]) - np.asarray(ee, dtype=float))
    return bool(robot.min_reach - REACH_EPS <= d <= robot.reach + REACH_EPS)


def elbow_ik_batch(robot: RobotModel, base_xy, ee, w):
    """Vectorized elbow inverse kinematics.

    Parameters
    ----------
    base_xy : (N, 2) array
    ee : (N, 3) array
    w : (N,) array of +-1

    Returns
    -------
    elbow : (N, 3) array
        Elbow positions; rows where ``ok`` is False are NaN.
    ok : (N,) bool array
        Reachable and not degenerate.
    """
    base_xy = np.atleast_2d(np.asarray(base_xy, dtype=float))
    ee = np.atleast_2d(np.asarray(ee, dtype=float))
    w = np.broadcast_to(np.asarray(w, dtype=float), (len(base_xy),))
    l1, l2 = robot.l1, robot.l2

    horiz = ee[:, :2] - base_xy
    r = np.hypot(horiz[:, 0], horiz[:, 1])
    z = ee[:, 2]
    d = np.hypot(r, z)
    ok = (d <= l1 + l2 + REACH_EPS) & (d >= abs(l1 - l2) - REACH_EPS) & (r > VERTICAL_EPS)

    with np.errstate(divide="ignore", invalid="ignore"):
        along = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d)
        h = np.sqrt(np.clip(l1 * l1 - along * along, 0.0, None))
        # planar coordinates (horizontal, vertical) of the elbow
        ph = (along * r - w * h * z) / d
        pz = (along * z + w * h * r) / d
        u = horiz / r[:, None]
    elbow = np.empty((len(base_xy), 3))
    elbow[:, :2] = base_xy + u * ph[:, None]
    elbow[:, 2] = pz
    elbow[~ok] = np.nan
    return elbow, ok


def elbow_ik(robot: RobotModel, base, ee, w: int) -> np.ndarray:
    """Elbow position for a given base, end-effector point and branch.

    ``w = +1`` returns the solution with the larger elbow height.  At full
    extension both branches coincide.

    Raises
    ------
    Unreachable
        If the end effector is farther than ``l1 + l2`` or closer than ``|l1 - l2|``.
    DegenerateVertical
        If the end effector is directly above the shoulder.
    """
    base = np.asarray(base, dtype=float)[:2]
    ee = np.asarray(ee, dtype=float)
    d = np.linalg.norm(np.array([base[0], base[1], 0.0]) - ee)
    if d > robot.reach + REACH_EPS or d < robot.min_reach - REACH_EPS:
        raise Unreachable(f"shoulder-to-end-effector distance {d:.6g} outside "
                          f"[{robot.min_reach:.6g}, {robot.reach:.6g}]")
    if np.hypot(*(ee[:2] - base)) <= VERTICAL_EPS:
        raise DegenerateVertical("end effector is directly above the shoulder")
    elbow, _ = elbow_ik_batch(robot, base[None, :], ee[None, :], np.array([w]))
    return elbow[0]


def collinearity_coeffs(base, elbow, ee):
    """Solve ``elbow - shoulder = a (ee - shoulder) + [0, 0, b]`` for ``(a, b)``.

    Works row-wise on ``(N, ...)`` arrays.  ``a`` is the least-squares fit on
    the horizontal components, which is exact for elbows produced by IK.
    """
    base = np.atleast_2d(base)
    elbow = np.atleast_2d(elbow)
    ee = np.atleast_2d(ee)
    he = ee[:, :2] - base[:, :2]
    hw = elbow[:, :2] - base[:, :2]
    a = np.sum(he * hw, axis=1) / np.sum(he * he, axis=1)
    b = elbow[:, 2] - a * ee[:, 2]
    return a, b


def reduced_to_full(robot: RobotModel, path: EePath, rc: ReducedConfig,
                    heading: float = 0.0) -> FullConfig:
    """Map a reduced configuration ``(x, y, t, w)`` to the full robot state."""
    ee = ee_position(path, rc.t)
    base = np.array([rc.x, rc.y], dtype=float)
    elbow = elbow_ik(robot, base, ee, rc.w)
    return FullConfig(base=base, heading=float(heading), elbow=elbow, ee=ee)
