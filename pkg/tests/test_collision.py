import math

import numpy as np

from locomanip.collision import Obb2, ObstacleSet, obb_overlap, state_collision_free
from locomanip.se2 import Pose2, compose

from oracles import obb_margin_oracle, obb_overlap_montecarlo, obb_overlap_oracle


def rand_box(rng, span=3.0):
    return Obb2(Pose2(rng.uniform(-span, span), rng.uniform(-span, span),
                      rng.uniform(-math.pi, math.pi)),
                (rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2)))


def test_identical_boxes_overlap():
    a = Obb2(Pose2(0.3, -0.2, 0.7), (0.4, 0.2))
    assert obb_overlap(a, a)


def test_far_apart_boxes_disjoint():
    a = Obb2(Pose2(0, 0, 0), (0.5, 0.5))
    b = Obb2(Pose2(3, 0, 0), (0.5, 0.5))
    assert not obb_overlap(a, b)


def test_rotated_near_miss_case():
    # decided by a 10^6-sample Monte-Carlo area oracle before implementation:
    # overlap fraction 0.0 -> disjoint
    a = Obb2(Pose2(0, 0, 0), (0.5, 0.5))
    b = Obb2(Pose2(1.9, 0, math.pi / 4), (0.5, 0.5))
    assert obb_overlap_montecarlo(a, b) == 0.0
    assert not obb_overlap(a, b)


def test_touching_counts_as_overlap():
    a = Obb2(Pose2(0, 0, 0), (0.5, 0.5))
    b = Obb2(Pose2(1.0, 0, 0), (0.5, 0.5))
    assert obb_overlap(a, b)


def test_symmetry_random_pairs():
    rng = np.random.default_rng(17)
    for _ in range(300):
        a, b = rand_box(rng), rand_box(rng)
        assert obb_overlap(a, b) == obb_overlap(b, a)


def test_agreement_with_exact_oracle():
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(1500):
        a, b = rand_box(rng), rand_box(rng)
        margin = obb_margin_oracle(a, b)
        if abs(margin) <= 1e-3:
            continue  # borderline contact: either answer acceptable
        checked += 1
        assert obb_overlap(a, b) == obb_overlap_oracle(a, b)
    assert checked >= 1000


def test_rigid_transform_invariance():
    rng = np.random.default_rng(31)
    for _ in range(200):
        a, b = rand_box(rng), rand_box(rng)
        g = Pose2(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-math.pi, math.pi))
        ga = Obb2(compose(g, a.center), a.half_extents)
        gb = Obb2(compose(g, b.center), b.half_extents)
        assert obb_overlap(a, b) == obb_overlap(ga, gb)


def test_axis_aligned_reduces_to_interval_tests():
    rng = np.random.default_rng(37)
    for _ in range(300):
        ax, ay = rng.uniform(-2, 2, 2)
        bx, by = rng.uniform(-2, 2, 2)
        ha = rng.uniform(0.1, 1.0, 2)
        hb = rng.uniform(0.1, 1.0, 2)
        a = Obb2(Pose2(ax, ay, 0), (ha[0], ha[1]))
        b = Obb2(Pose2(bx, by, 0), (hb[0], hb[1]))
        expected = (abs(bx - ax) <= ha[0] + hb[0]) and (abs(by - ay) <= ha[1] + hb[1])
        assert obb_overlap(a, b) == expected


def test_state_collision_free_no_obstacles():
    robot = Obb2(Pose2(0, 0, 0), (0.3, 0.2))
    obj = Obb2(Pose2(0, 0, 0), (0.2, 0.2))
    assert state_collision_free(Pose2(0, 0, 0), robot, Pose2(1, 0, 0), obj, [])


def test_state_collision_object_hit():
    robot = Obb2(Pose2(0, 0, 0), (0.3, 0.2))
    obj = Obb2(Pose2(0, 0, 0), (0.2, 0.2))
    obstacle = Obb2(Pose2(1, 0, 0), (0.2, 0.2))  # coincides with the object
    assert not state_collision_free(Pose2(-1, 0, 0), robot, Pose2(1, 0, 0), obj,
                                    [obstacle])


def test_state_collision_robot_hit_only():
    robot = Obb2(Pose2(0, 0, 0), (0.3, 0.2))
    obj = Obb2(Pose2(0, 0, 0), (0.2, 0.2))
    obstacle = Obb2(Pose2(-1, 0, 0), (0.25, 0.25))
    assert not state_collision_free(Pose2(-1, 0, 0), robot, Pose2(1, 0, 0), obj,
                                    [obstacle])
    assert state_collision_free(Pose2(-2.0, 0, 0), robot, Pose2(1, 0, 0), obj,
                                [obstacle])


def test_template_offset_is_applied_in_anchor_frame():
    # template shifted +x in anchor frame; anchor rotated 90 deg -> shift is +y
    robot = Obb2(Pose2(0.5, 0, 0), (0.1, 0.1))
    obstacle = Obb2(Pose2(0, 0.5, 0), (0.15, 0.15))
    obj = Obb2(Pose2(0, 0, 0), (0.01, 0.01))
    assert not state_collision_free(Pose2(0, 0, math.pi / 2), robot,
                                    Pose2(5, 5, 0), obj, [obstacle])


def test_obstacle_set_matches_scalar_checks():
    rng = np.random.default_rng(41)
    obstacles = [rand_box(rng, 2.0) for _ in range(5)]
    oset = ObstacleSet(obstacles)
    template = Obb2(Pose2(0.1, -0.05, 0.2), (0.35, 0.22))
    poses = np.column_stack([
        rng.uniform(-3, 3, 400), rng.uniform(-3, 3, 400),
        rng.uniform(-math.pi, math.pi, 400)])
    batch = oset.boxes_free(poses, template)
    for i in range(poses.shape[0]):
        anchor = Pose2(*poses[i])
        placed = template.placed_at(anchor)
        scalar = not any(obb_overlap(placed, ob) for ob in obstacles)
        assert batch[i] == scalar
