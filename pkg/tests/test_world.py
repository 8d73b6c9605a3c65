import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multilocal.model import FullConfig, RobotModel, elbow_ik
from multilocal.world import (
    Box, Sphere, World, clearance_batch, collides_batch, obs, seg_obs, signed_clearance,
)

ROBOT = RobotModel(1.0, 1.0, arm_radius=0.05, base_radius=0.1, base_depth=0.3)


def pose(base, ee, w=1, robot=ROBOT):
    base = np.asarray(base, dtype=float)
    ee = np.asarray(ee, dtype=float)
    return FullConfig(base=base, heading=0.0, elbow=elbow_ik(robot, base, ee, w), ee=ee)


STRAIGHT = FullConfig(base=np.zeros(2), heading=0.0, elbow=np.array([1.0, 0, 0]),
                      ee=np.array([2.0, 0, 0]))


class TestObstacles:
    def test_bad_sphere(self):
        with pytest.raises(ValueError):
            Sphere((0, 0, 0), 0.0)

    def test_bad_box(self):
        with pytest.raises(ValueError):
            Box((0, 0, 0), (1, 0, 1))

    def test_bad_world(self):
        with pytest.raises(ValueError):
            World((), 0.0, 1.0)


class TestObs:
    def test_empty_world(self):
        assert not obs(World(), ROBOT, STRAIGHT)

    def test_sphere_on_elbow(self):
        q = pose((0, 0), (1.2, 0.3, 0.4))
        assert obs(World((Sphere(tuple(q.elbow), 0.1),)), ROBOT, q)

    def test_clear_above_elbow(self):
        # point-segment distance 0.2 exceeds 0.1 + 0.05
        assert not obs(World((Sphere((1, 0, 0.2), 0.1),)), ROBOT, STRAIGHT)

    def test_box_hits_base_column(self):
        assert obs(World((Box((-0.05, -0.05, -0.25), (0.05, 0.05, -0.2)),)), ROBOT, STRAIGHT)


class TestSignedClearance:
    def test_empty(self):
        assert signed_clearance(World(), ROBOT, STRAIGHT) == []

    def test_point_segment_value(self):
        thin = RobotModel(1.0, 1.0)
        vals = signed_clearance(World((Sphere((1.0, 1.0, 0.0), 0.5),)), thin, STRAIGHT)
        # base column is a zero-length axis at the origin: distance sqrt(2)
        assert vals == pytest.approx([np.sqrt(2) - 0.5, 0.5, 0.5])

    def test_deepest_penetration(self):
        w = World((Sphere((1.5, 0, 0), 0.2),))
        assert signed_clearance(w, ROBOT, STRAIGHT)[2] == pytest.approx(-(0.2 + 0.05))

    def test_order_capsule_major(self):
        w = World((Sphere((1.5, 0, 0), 0.2), Sphere((0, 0, -0.2), 0.05)))
        vals = signed_clearance(w, ROBOT, STRAIGHT)
        assert len(vals) == 6
        assert vals[1] == pytest.approx(-0.15)  # base column vs second sphere
        assert vals[4] == pytest.approx(-0.25)  # forearm vs first sphere


def random_scene(rng):
    obstacles = []
    for _ in range(3):
        if rng.random() < 0.5:
            obstacles.append(Sphere(tuple(rng.uniform(-1.5, 1.5, 3)), float(rng.uniform(0.05, 0.4))))
        else:
            c = rng.uniform(-1.5, 1.5, 3)
            h = rng.uniform(0.05, 0.4, 3)
            obstacles.append(Box(tuple(c - h), tuple(c + h)))
    return World(tuple(obstacles), 2.0, 2.0)


def random_pose(rng):
    base = rng.uniform(-1, 1, 2)
    ang = rng.uniform(-np.pi, np.pi)
    r = rng.uniform(0.3, 1.9)
    z = rng.uniform(-0.3, 0.3)
    ee = np.array([base[0] + r * np.cos(ang), base[1] + r * np.sin(ang), z])
    if np.hypot(r, z) > 2 or np.hypot(r, z) < 0.05:
        return None
    return pose(base, ee, int(rng.choice([-1, 1])))


def test_obs_agrees_with_min_clearance():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 400:
        w, q = random_scene(rng), random_pose(rng)
        if q is None:
            continue
        assert obs(w, ROBOT, q) == (min(signed_clearance(w, ROBOT, q)) < 0)
        checked += 1


def test_batch_matches_scalar():
    rng = np.random.default_rng(1)
    w = random_scene(rng)
    qs = [q for q in (random_pose(rng) for _ in range(300)) if q is not None]
    base = np.array([q.base for q in qs])
    elbow = np.array([q.elbow for q in qs])
    ee = np.array([q.ee for q in qs])
    flags = collides_batch(w, ROBOT, base, elbow, ee)
    clear = clearance_batch(w, ROBOT, base, elbow, ee)
    for i, q in enumerate(qs):
        assert flags[i] == obs(w, ROBOT, q)
        np.testing.assert_allclose(clear[:, i, :].ravel(), signed_clearance(w, ROBOT, q))


class TestSegObs:
    def test_degenerate_free(self):
        assert not seg_obs(World((Sphere((0, 1.5, 0), 0.1),)), ROBOT, STRAIGHT, STRAIGHT, 5)

    def test_thin_wall_between(self):
        q1 = pose((-1.0, 0), (-0.5, 1.2, 0.2))
        q2 = pose((1.0, 0), (0.5, 1.2, 0.2))
        wall = World((Box((-0.05, -0.5, -1.0), (0.05, 0.5, 1.0)),))
        assert not obs(wall, ROBOT, q1) and not obs(wall, ROBOT, q2)
        assert seg_obs(wall, ROBOT, q1, q2, 40)
        assert seg_obs(wall, ROBOT, q1, q2)  # default step 0.01 m

    def test_endpoint_included(self):
        q2 = pose((1.0, 0), (1.5, 1.0, 0.0))
        w = World((Sphere(tuple(STRAIGHT.ee), 0.05),))
        assert seg_obs(w, ROBOT, STRAIGHT, q2, 1)

    def test_sub_validation(self):
        with pytest.raises(ValueError):
            seg_obs(World(), ROBOT, STRAIGHT, STRAIGHT, 0)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_degenerate_equals_obs(self, seed):
        rng = np.random.default_rng(seed)
        q = random_pose(rng)
        if q is None:
            return
        w = random_scene(rng)
        assert seg_obs(w, ROBOT, q, q, 3) == obs(w, ROBOT, q)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), sub=st.integers(1, 12))
    def test_refinement_monotone(self, seed, sub):
        rng = np.random.default_rng(seed)
        q1, q2 = random_pose(rng), random_pose(rng)
        if q1 is None or q2 is None:
            return
        w = random_scene(rng)
        # multiples of sub contain every coarser sample
        if seg_obs(w, ROBOT, q1, q2, sub):
            assert seg_obs(w, ROBOT, q1, q2, 3 * sub)
