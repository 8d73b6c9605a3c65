"""Direct-transcription trajectory optimization for the mobile manipulator.

Decision vector layout (``T`` steps, ``T + 1`` knots)::

    states   (T + 1) x 8 : base x, base y, heading, elbow x, y, z, a, b
    controls  T      x 5 : v, omega, elbow velocity x, y, z

Constraints per knot ``k``:

* ``|elbow - shoulder|^2 = l1^2`` and ``|elbow - ee|^2 = l2^2``
* ``elbow - shoulder = a (ee - shoulder) + [0, 0, b]``
* every capsule/obstacle clearance ``>= margin``

and per step the unicycle base, heading and elbow dynamics.  The objective is
the sum of squared controls.

The solver is an augmented Lagrangian method whose subproblems are nonlinear
least-squares problems solved by a sparse Levenberg-Marquardt iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import geometry
from .errors import DegenerateGuess, SolveFailure
from .model import EePath, RobotModel, collinearity_coeffs, ee_position, elbow_ik_batch
from .world import Sphere, World

N_STATE = 8
N_CONTROL = 5
TOL_EQ = 1e-4
TOL_INEQ = 1e-4
TOL_STAT = 1e-3
HEADING_EPS = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Knot and step arrays of one candidate motion.

    ``base``, ``heading``, ``elbow``, ``a``, ``b`` and ``ee`` have ``T + 1``
    rows; ``v``, ``omega`` and ``delta_elbow`` have ``T`` rows.
    """

    base: np.ndarray
    heading: np.ndarray
    elbow: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    delta_elbow: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ee: np.ndarray
    dt: float

    def __post_init__(self):
        n = len(self.base)
        for name, shape in (("base", (n, 2)), ("heading", (n,)), ("elbow", (n, 3)),
                            ("a", (n,)), ("b", (n,)), ("ee", (n, 3)),
                            ("v", (n - 1,)), ("omega", (n - 1,)), ("delta_elbow", (n - 1, 3))):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n < 2:
            raise ValueError("a trajectory needs at least 2 knots")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    @property
    def T(self) -> int:
        return len(self.base) - 1

    @property
    def shoulder(self) -> np.ndarray:
        return np.column_stack([self.base, np.zeros(len(self.base))])


@dataclass(frozen=True)
class SolveReport:
    cost: float
    max_eq_violation: float
    max_ineq_violation: float
    iterations: int
    converged: bool
    stationarity: float = float("nan")
    reason: str = ""


@dataclass(frozen=True)
class SolveOptions:
    tol_eq: float = TOL_EQ
    tol_ineq: float = TOL_INEQ
    tol_stat: float = TOL_STAT
    max_outer: int = 40
    max_inner: int = 150
    max_total: int = 3000
    rho0: float = 1e3
    rho_max: float = 1e9


def evaluate_cost(traj: Trajectory) -> float:
    """Sum of squared controls over all steps."""
    return float(np.sum(traj.v ** 2) + np.sum(traj.omega ** 2) + np.sum(traj.delta_elbow ** 2))


# ----------------------------------------------------------------------------
# seeding


def _resample_index(t, k_t, arclen):
    """Fractional polyline position for each target ``k_t`` on a nondecreasing ``t``."""
    pos = np.empty(len(k_t))
    for n, tk in enumerate(k_t):
        eq = np.nonzero(t == tk)[0]
        if len(eq):
            # plateau: arc-length midpoint of the stretch sitting at this t
            lo, hi = eq[0], eq[-1]
            mid = 0.5 * (arclen[lo] + arclen[hi])
            j = int(np.searchsorted(arclen[lo:hi + 1], mid, side="right")) + lo - 1
            j = min(max(j, lo), hi)
            if j == hi or arclen[j + 1] == arclen[j]:
                pos[n] = j
            else:
                pos[n] = j + (mid - arclen[j]) / (arclen[j + 1] - arclen[j])
        else:
            j = int(np.searchsorted(t, tk, side="right")) - 1
            pos[n] = j + (tk - t[j]) / (t[j + 1] - t[j])
    return pos


def _interp_rows(arr, pos):
    j = np.clip(np.floor(pos).astype(int), 0, len(arr) - 1)
    j1 = np.minimum(j + 1, len(arr) - 1)
    f = (pos - j)[:, None]
    return (1 - f) * arr[j] + f * arr[j1]


def _project_reach(robot, base, ee):
    """Move each base point radially (about the ee) into the reachable annulus."""
    base = base.copy()
    horiz = base - ee[:, :2]
    r = np.hypot(horiz[:, 0], horiz[:, 1])
    z = ee[:, 2]
    lo, hi = robot.min_reach, robot.reach
    rmax = np.sqrt(np.maximum(hi ** 2 - z ** 2, 0.0))
    rmin = np.sqrt(np.maximum(lo ** 2 - z ** 2, 0.0))
    shrink = 1e-9 * (1.0 + hi)
    target = np.clip(r, rmin + shrink, np.maximum(rmax - shrink, rmin + shrink))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where((r > 0)[:, None], horiz / r[:, None], np.array([1.0, 0.0]))
    return ee[:, :2] + u * target[:, None]


def seed_from_guess(guess_base, guess_elbow, guess_t, robot: RobotModel, path: EePath,
                    T: int, dt: float, guess_w=None) -> Trajectory:
    """Turn a graph path into a dynamically consistent initial trajectory.

    The guess is resampled at ``t_k = k / T``.  A ``t`` sequence that steps
    backwards is replaced by its running maximum; where ``t`` repeats, the knot
    sits at the arc-length midpoint of the repeated stretch.  Elbows come from
    inverse kinematics on the branch of the nearest guess point (or the branch
    closest to the interpolated guess elbow when ``guess_w`` is omitted), so
    the kinematic constraints hold exactly.  Headings follow the base
    displacement and controls are finite differences, so the dynamics hold
    exactly as well.

    Raises
    ------
    DegenerateGuess
        If every ``t`` in the guess is identical.
    """
    gb = np.asarray(guess_base, dtype=float).reshape(-1, 2)
    ge = np.asarray(guess_elbow, dtype=float).reshape(-1, 3)
    gt = np.asarray(guess_t, dtype=float).ravel()
    if len(gb) == 0 or not (len(gb) == len(ge) == len(gt)):
        raise ValueError("guess arrays must be nonempty and of equal length")
    if np.ptp(gt) == 0:
        raise DegenerateGuess("guess does not advance along the end-effector path")
    if T < 1:
        raise ValueError("T must be >= 1")
    t = np.maximum.accumulate(gt)
    t = (t - t[0]) / (t[-1] - t[0]) if (t[0] != 0 or t[-1] != 1) else t
    arclen = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(gb, axis=0), axis=1))])
    tk = np.arange(T + 1) / T
    tk[-1] = 1.0
    pos = _resample_index(t, tk, arclen)

    base = _interp_rows(gb, pos)
    ee = ee_position(path, tk)
    base = _project_reach(robot, base, ee)
    if guess_w is not None:
        gw = np.asarray(guess_w, dtype=float).ravel()
        w = gw[np.clip(np.rint(pos).astype(int), 0, len(gw) - 1)]
    else:
        target = _interp_rows(ge, pos)
        up, _ = elbow_ik_batch(robot, base, ee, np.ones(T + 1))
        dn, _ = elbow_ik_batch(robot, base, ee, -np.ones(T + 1))
        w = np.where(np.linalg.norm(up - target, axis=1) <= np.linalg.norm(dn - target, axis=1),
                     1.0, -1.0)
    elbow, ok = elbow_ik_batch(robot, base, ee, w)
    if not ok.all():
        # ee straight above the base: nudge the base sideways
        bad = ~ok
        base[bad, 0] += 1e-6
        elbow[bad], ok2 = elbow_ik_batch(robot, base[bad], ee[bad], w[bad])
        if not ok2.all():
            raise DegenerateGuess("could not place an elbow for every knot")

    step = np.diff(base, axis=0)
    dist = np.linalg.norm(step, axis=1)
    raw = np.arctan2(step[:, 1], step[:, 0])
    heading = np.empty(T + 1)
    moving = dist >= HEADING_EPS
    if moving.any():
        first = raw[np.argmax(moving)]
        cur = first
        for k in range(T):
            if moving[k]:
                cur = raw[k]
            heading[k] = cur
    else:
        heading[:T] = 0.0
    heading[T] = heading[T - 1]
    heading = np.unwrap(heading)
    v = np.where(moving, dist, 0.0) / dt
    omega = np.diff(heading) / dt
    delta_elbow = np.diff(elbow, axis=0) / dt
    a, b = collinearity_coeffs(base, elbow, ee)
    return Trajectory(base=base, heading=heading, elbow=elbow, v=v, omega=omega,
                      delta_elbow=delta_elbow, a=a, b=b, ee=ee, dt=dt)


# ----------------------------------------------------------------------------
# transcription


@dataclass(frozen=True)
class ProblemSpec:
    """Transcribed problem: objective, equalities and inequalities with sparse Jacobians."""

    world: World
    robot: RobotModel
    path: EePath
    T: int
    dt: float
    clearance_margin: float
    ee: np.ndarray = field(repr=False)
    pin_start: tuple | None = None
    pin_goal: tuple | None = None

    def _pins(self):
        """``(row offset, state column, value)`` for every pinned quantity."""
        out = []
        for k, pin in ((0, self.pin_start), (self.T, self.pin_goal)):
            if pin is not None:
                for j, val in enumerate(pin):
                    out.append((N_STATE * k + j, val))
        return out

    @property
    def n_vars(self) -> int:
        return N_STATE * (self.T + 1) + N_CONTROL * self.T

    @property
    def n_eq(self) -> int:
        return 5 * (self.T + 1) + 6 * self.T + len(self._pins())

    @property
    def n_ineq(self) -> int:
        return 3 * len(self.world.obstacles) * (self.T + 1)

    # --- packing ---------------------------------------------------------
    def pack(self, traj: Trajectory) -> np.ndarray:
        if traj.T != self.T:
            raise ValueError(f"trajectory has T={traj.T}, problem has T={self.T}")
        states = np.column_stack([traj.base, traj.heading, traj.elbow, traj.a, traj.b])
        controls = np.column_stack([traj.v, traj.omega, traj.delta_elbow])
        return np.concatenate([states.ravel(), controls.ravel()])

    def unpack(self, x: np.ndarray) -> Trajectory:
        S, C = self._split(x)
        return Trajectory(base=S[:, 0:2], heading=S[:, 2], elbow=S[:, 3:6], a=S[:, 6], b=S[:, 7],
                          v=C[:, 0], omega=C[:, 1], delta_elbow=C[:, 2:5], ee=self.ee, dt=self.dt)

    def _split(self, x):
        ns = N_STATE * (self.T + 1)
        return x[:ns].reshape(self.T + 1, N_STATE), x[ns:].reshape(self.T, N_CONTROL)

    def _sidx(self, k, j):
        return N_STATE * k + j

    def _cidx(self, k, j):
        return N_STATE * (self.T + 1) + N_CONTROL * k + j

    def zeros(self) -> Trajectory:
        """All-zero decision vector: the starting point when no guess is available."""
        return self.unpack(np.zeros(self.n_vars))

    # --- objective -------------------------------------------------------
    def objective(self, x):
        ns = N_STATE * (self.T + 1)
        u = x[ns:]
        grad = np.zeros_like(x)
        grad[ns:] = 2.0 * u
        return float(u @ u), grad

    def control_residual(self):
        """Objective as ``|R0 x|^2`` with the selector ``R0`` (sparse)."""
        ns = N_STATE * (self.T + 1)
        nc = self.n_vars - ns
        return sp.csr_matrix((np.ones(nc), (np.arange(nc), ns + np.arange(nc))),
                             shape=(nc, self.n_vars))

    # --- equalities ------------------------------------------------------
    def equalities(self, x):
        """Residuals and sparse Jacobian of all equality constraints.

        Row order: per knot ``[upper arm length, forearm length, collinearity x, y, z]``,
        then per step ``[base x, base y, heading, elbow x, y, z]``, then the
        pinned start and goal components.
        """
        T, dt = self.T, self.dt
        S, C = self._split(x)
        xb, th, xw, a, b = S[:, 0:2], S[:, 2], S[:, 3:6], S[:, 6], S[:, 7]
        v, om, dw = C[:, 0], C[:, 1], C[:, 2:5]
        e = self.ee
        K = np.arange(T + 1)
        sh = np.column_stack([xb, np.zeros(T + 1)])
        du = xw - sh
        de = xw - e
        res_kin = np.empty((T + 1, 5))
        res_kin[:, 0] = np.sum(du * du, axis=1) - self.robot.l1 ** 2
        res_kin[:, 1] = np.sum(de * de, axis=1) - self.robot.l2 ** 2
        res_kin[:, 2:4] = xw[:, :2] - xb - a[:, None] * (e[:, :2] - xb)
        res_kin[:, 4] = xw[:, 2] - a * e[:, 2] - b

        rows, cols, vals = [], [], []

        def add(r, c, val):
            rows.append(np.asarray(r).ravel())
            cols.append(np.asarray(c).ravel())
            vals.append(np.broadcast_to(val, np.shape(r)).ravel())

        base_row = 5 * K
        si = N_STATE * K
        for j in range(2):
            add(base_row, si + 0 + j, -2.0 * du[:, j])
        for j in range(3):
            add(base_row, si + 3 + j, 2.0 * du[:, j])
            add(base_row + 1, si + 3 + j, 2.0 * de[:, j])
        for j in range(2):
            r = base_row + 2 + j
            add(r, si + 3 + j, np.ones(T + 1))
            add(r, si + j, a - 1.0)
            add(r, si + 6, -(e[:, j] - xb[:, j]))
        r = base_row + 4
        add(r, si + 5, np.ones(T + 1))
        add(r, si + 6, -e[:, 2])
        add(r, si + 7, -np.ones(T + 1))

        k = np.arange(T)
        c, s = np.cos(th[:-1]), np.sin(th[:-1])
        res_dyn = np.empty((T, 6))
        res_dyn[:, 0] = xb[1:, 0] - xb[:-1, 0] - c * v * dt
        res_dyn[:, 1] = xb[1:, 1] - xb[:-1, 1] - s * v * dt
        res_dyn[:, 2] = th[1:] - th[:-1] - om * dt
        res_dyn[:, 3:6] = xw[1:] - xw[:-1] - dw * dt
        r0 = 5 * (T + 1) + 6 * k
        s0 = N_STATE * k
        s1 = N_STATE * (k + 1)
        c0 = N_STATE * (T + 1) + N_CONTROL * k
        for j in range(2):
            add(r0 + j, s1 + j, np.ones(T))
            add(r0 + j, s0 + j, -np.ones(T))
        add(r0, s0 + 2, s * v * dt)
        add(r0 + 1, s0 + 2, -c * v * dt)
        add(r0, c0, -c * dt)
        add(r0 + 1, c0, -s * dt)
        add(r0 + 2, s1 + 2, np.ones(T))
        add(r0 + 2, s0 + 2, -np.ones(T))
        add(r0 + 2, c0 + 1, np.full(T, -dt))
        for j in range(3):
            add(r0 + 3 + j, s1 + 3 + j, np.ones(T))
            add(r0 + 3 + j, s0 + 3 + j, -np.ones(T))
            add(r0 + 3 + j, c0 + 2 + j, np.full(T, -dt))

        res = [res_kin.ravel(), res_dyn.ravel()]
        pins = self._pins()
        if pins:
            rp = 5 * (T + 1) + 6 * T
            idx = np.array([i for i, _ in pins])
            res.append(x[idx] - np.array([v for _, v in pins]))
            add(rp + np.arange(len(pins)), idx, np.ones(len(pins)))
        J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(self.n_eq, self.n_vars))
        return np.concatenate(res), J

    # --- inequalities ----------------------------------------------------
    def inequalities(self, x):
        """Clearance minus margin (must be ``>= 0``) and its sparse Jacobian.

        Row order: knot major, then capsule (base column, upper arm, forearm),
        then obstacle.
        """
        T = self.T
        n_obs = len(self.world.obstacles)
        if n_obs == 0:
            return np.zeros(0), sp.csr_matrix((0, self.n_vars))
        S, _ = self._split(x)
        xb, xw = S[:, 0:2], S[:, 3:6]
        e = self.ee
        sh = np.column_stack([xb, np.zeros(T + 1)])
        foot = sh.copy()
        foot[:, 2] = -self.robot.base_depth
        A = np.stack([foot, sh, xw])  # (3, T+1, 3)
        B = np.stack([sh, xw, e])
        radii = np.array([self.robot.base_radius, self.robot.arm_radius, self.robot.arm_radius])

        h = np.empty((T + 1, 3, n_obs))
        gA = np.empty((T + 1, 3, n_obs, 3))
        gB = np.empty((T + 1, 3, n_obs, 3))
        for j, ob in enumerate(self.world.obstacles):
            if isinstance(ob, Sphere):
                d, ga, gb = geometry.segment_sphere_grad(A, B, np.array(ob.center))
                d = d - ob.radius
            else:
                d, ga, gb = geometry.segment_box_grad(A, B, np.array(ob.min), np.array(ob.max))
            h[:, :, j] = (d - radii[:, None]).T
            gA[:, :, j] = np.transpose(ga, (1, 0, 2))
            gB[:, :, j] = np.transpose(gb, (1, 0, 2))
        h -= self.clearance_margin

        K = np.arange(T + 1)
        row = (K[:, None, None] * 3 + np.arange(3)[None, :, None]) * n_obs + np.arange(n_obs)
        si = N_STATE * K[:, None, None] + np.zeros((1, 1, n_obs), dtype=int)
        rows, cols, vals = [], [], []
        # base column: both endpoints follow the base xy
        for j in range(2):
            rows.append(row[:, 0])
            cols.append(si[:, 0] + j)
            vals.append(gA[:, 0, :, j] + gB[:, 0, :, j])
        # upper arm: shoulder -> elbow
        for j in range(2):
            rows.append(row[:, 1])
            cols.append(si[:, 0] + j)
            vals.append(gA[:, 1, :, j])
        for j in range(3):
            rows.append(row[:, 1])
            cols.append(si[:, 0] + 3 + j)
            vals.append(gB[:, 1, :, j])
        # forearm: elbow -> fixed end effector
        for j in range(3):
            rows.append(row[:, 2])
            cols.append(si[:, 0] + 3 + j)
            vals.append(gA[:, 2, :, j])
        J = sp.csr_matrix((np.concatenate([v.ravel() for v in vals]),
                           (np.concatenate([r.ravel() for r in rows]),
                            np.concatenate([c.ravel() for c in cols]))),
                          shape=(self.n_ineq, self.n_vars))
        return h.ravel(), J

    # --- reporting -------------------------------------------------------
    def violations(self, x):
        """Largest equality and inequality violations in natural units.

        Link-length rows are measured as ``| |elbow - p| - l |`` (metres)
        rather than in the squared form used internally.
        """
        c, _ = self.equalities(x)
        T = self.T
        kin = c[:5 * (T + 1)].reshape(T + 1, 5)
        S, _ = self._split(x)
        xb, xw = S[:, 0:2], S[:, 3:6]
        sh = np.column_stack([xb, np.zeros(T + 1)])
        l_up = np.abs(np.linalg.norm(xw - sh, axis=1) - self.robot.l1)
        l_fo = np.abs(np.linalg.norm(xw - self.ee, axis=1) - self.robot.l2)
        rest = np.concatenate([np.abs(kin[:, 2:]).ravel(), np.abs(c[5 * (T + 1):])])
        eq = float(max(l_up.max(), l_fo.max(), rest.max() if len(rest) else 0.0))
        h, _ = self.inequalities(x)
        ineq = float(max(0.0, -h.min())) if len(h) else 0.0
        return eq, ineq


def transcribe(world: World, robot: RobotModel, path: EePath, T: int, dt: float,
               clearance_margin: float = 0.01, pin_start=None, pin_goal=None) -> ProblemSpec:
    """Build the transcribed problem for ``T`` steps of length ``dt``.

    ``pin_start`` and ``pin_goal`` fix the first and last base pose, given as
    ``(x, y)`` or ``(x, y, heading)``; by default both are free.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if clearance_margin < 0:
        raise ValueError("clearance_margin must be >= 0")
    tk = np.arange(T + 1) / T
    tk[-1] = 1.0
    ee = ee_position(path, tk)
    ee.setflags(write=False)
    pins = []
    for pin in (pin_start, pin_goal):
        if pin is not None:
            pin = tuple(float(p) for p in pin)
            if len(pin) not in (2, 3):
                raise ValueError("a pinned pose is (x, y) or (x, y, heading)")
        pins.append(pin)
    return ProblemSpec(world=world, robot=robot, path=path, T=int(T), dt=float(dt),
                       clearance_margin=float(clearance_margin), ee=ee,
                       pin_start=pins[0], pin_goal=pins[1])


# ----------------------------------------------------------------------------
# solver


class _Merit:
    """Augmented Lagrangian written as a sum of squares ``|R(x)|^2``."""

    def __init__(self, problem: ProblemSpec, lam, mu, rho):
        self.p = problem
        self.lam, self.mu, self.rho = lam, mu, rho
        self.R0 = problem.control_residual()

    def residual(self, x, jac=True):
        p, rho = self.p, self.rho
        c, Jc = p.equalities(x)
        h, Jh = p.inequalities(x)
        r_obj = self.R0 @ x
        r_eq = np.sqrt(rho / 2.0) * (c + self.lam / rho)
        shifted = self.mu - rho * h
        active = shifted > 0
        r_in = np.sqrt(1.0 / (2.0 * rho)) * np.where(active, shifted, 0.0)
        R = np.concatenate([r_obj, r_eq, r_in])
        if not jac:
            return R, None, (c, h)
        Jin = -np.sqrt(rho / 2.0) * sp.diags(active.astype(float)) @ Jh
        J = sp.vstack([self.R0, np.sqrt(rho / 2.0) * Jc, Jin], format="csr")
        return R, J, (c, h, Jc, Jh)


def _lm(merit: _Merit, x, tol_grad, max_iter, budget):
    """Levenberg-Marquardt on ``|R|^2``; returns ``(x, iterations, grad_inf)``."""
    R, J, _ = merit.residual(x)
    f = R @ R
    nu = 1e-3
    it = 0
    g = 2.0 * (J.T @ R)
    n = len(x)
    eye = sp.identity(n, format="csc")
    while it < max_iter and it < budget:
        gnorm = np.max(np.abs(g)) if n else 0.0
        if gnorm <= tol_grad:
            break
        H = (J.T @ J).tocsc()
        diag = H.diagonal()
        accepted = False
        while nu < 1e12:
            A = H + nu * (sp.diags(np.maximum(diag, 1e-6)) + 1e-9 * eye)
            try:
                step = spla.spsolve(A.tocsc(), -(J.T @ R))
            except RuntimeError:
                nu *= 10
                continue
            if not np.all(np.isfinite(step)):
                nu *= 10
                continue
            xn = x + step
            Rn, _, _ = merit.residual(xn, jac=False)
            fn = Rn @ Rn
            pred = f - np.sum((R + J @ step) ** 2)
            if fn < f and pred > 0:
                ratio = (f - fn) / pred
                x, R, f = xn, Rn, fn
                if ratio > 0.75:
                    nu = max(nu / 3.0, 1e-12)
                elif ratio < 0.25:
                    nu *= 2.0
                accepted = True
                break
            nu *= 4.0
        it += 1
        if not accepted:
            break
        _, J, _ = merit.residual(x)
        g = 2.0 * (J.T @ R)
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    return x, it, gnorm


def solve(problem: ProblemSpec, init: Trajectory, opts: SolveOptions | None = None):
    """Locally solve the transcribed problem from ``init``.

    Returns ``(SolveReport, Trajectory)``.  The result is a deterministic
    function of ``(problem, init, opts)``.

    Raises
    ------
    SolveFailure
        When the iteration caps are reached without meeting the tolerances;
        the last iterate and its report ride on the exception.
    """
    opts = opts or SolveOptions()
    x = problem.pack(init).astype(float)
    lam = np.zeros(problem.n_eq)
    mu = np.zeros(problem.n_ineq)
    rho = opts.rho0
    total = 0
    inner_tol = 1e-1
    prev_viol = np.inf
    report = None
    for outer in range(opts.max_outer):
        merit = _Merit(problem, lam, mu, rho)
        x, it, _ = _lm(merit, x, inner_tol, opts.max_inner, opts.max_total - total)
        total += it
        c, _ = problem.equalities(x)
        h, _ = problem.inequalities(x)
        lam = lam + rho * c
        mu = np.maximum(0.0, mu - rho * h)
        eq_v, in_v = problem.violations(x)
        stat = _stationarity(problem, x, lam, mu)
        cost = problem.objective(x)[0]
        report = SolveReport(cost=cost, max_eq_violation=eq_v, max_ineq_violation=in_v,
                             iterations=total, converged=False, stationarity=stat)
        if eq_v <= opts.tol_eq and in_v <= opts.tol_ineq and stat <= opts.tol_stat:
            report = replace(report, converged=True, reason="converged")
            return report, problem.unpack(x)
        viol = max(np.max(np.abs(c)) if len(c) else 0.0,
                   max(0.0, -h.min()) if len(h) else 0.0)
        if viol > 0.25 * prev_viol and rho < opts.rho_max:
            rho = min(rho * 10.0, opts.rho_max)
        prev_viol = viol
        inner_tol = max(inner_tol * 0.3, 0.1 * opts.tol_stat)
        if total >= opts.max_total:
            break
    reason = "iteration limit reached without meeting tolerances"
    report = replace(report, reason=reason)
    raise SolveFailure(reason, report=report, trajectory=problem.unpack(x))


def _stationarity(problem, x, lam, mu):
    _, gf = problem.objective(x)
    _, Jc = problem.equalities(x)
    _, Jh = problem.inequalities(x)
    g = gf + Jc.T @ lam
    if Jh.shape[0]:
        g = g - Jh.T @ mu
    return float(np.max(np.abs(g))) if len(g) else 0.0
