import math

import numpy as np
import pytest

from locomanip.fr_planner import FootSide, HandMode, PlanRecord
from locomanip.se2 import Pose2
from locomanip.traj_sketch import (
    GaitTiming,
    TimedTraj,
    preview_com,
    save_sketch_csv,
    sketch_svg,
    swing_spline,
    zmp_in_support,
    zmp_reference,
)


def walk_records(n_steps, stride=0.15, half_width=0.1):
    """A straight alternating gait as plan records."""
    left = Pose2(0.0, half_width, 0.0)
    right = Pose2(0.0, -half_width, 0.0)
    records = [PlanRecord(0, FootSide.LEFT, left, right, HandMode.LEFT, 0, 0.0)]
    stance, swing = left, right
    stance_side = FootSide.LEFT
    for k in range(1, n_steps + 1):
        # the old stance foot steps forward past the planted foot
        moved = Pose2(stance.x + stride, stance.y, 0.0)
        records.append(PlanRecord(k, stance_side.other(), swing, moved,
                                  HandMode.LEFT, 0, 0.0))
        stance, swing = swing, moved
        stance_side = stance_side.other()
    return records


# -- swing spline -------------------------------------------------------------

def test_swing_spline_vertical_hop():
    p = Pose2(0.3, -0.2, 0.5)
    traj = swing_spline(p, p, apex_height=0.05, duration=0.8, dt=0.01)
    assert traj.samples[0, 2] == pytest.approx(0.0, abs=1e-12)
    assert traj.samples[-1, 2] == pytest.approx(0.0, abs=1e-12)
    mid = len(traj) // 2
    assert traj.samples[mid, 2] == pytest.approx(0.05, abs=1e-12)
    assert np.allclose(traj.samples[:, 0], p.x)
    assert np.allclose(traj.samples[:, 1], p.y)


def test_swing_spline_apex_is_max_and_z_nonnegative():
    rng = np.random.default_rng(3)
    for _ in range(40):
        a = Pose2(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3))
        b = Pose2(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3))
        traj = swing_spline(a, b, apex_height=0.05, duration=0.7, dt=0.005)
        z = traj.samples[:, 2]
        assert z.min() >= 0.0
        assert z.max() <= 0.05 + 1e-9
        assert traj.samples[0, 0] == pytest.approx(a.x)
        assert traj.samples[-1, 0] == pytest.approx(b.x)
        assert traj.samples[-1, 1] == pytest.approx(b.y)


def test_swing_spline_endpoint_yaw_shorter_arc():
    a = Pose2(0, 0, math.radians(170))
    b = Pose2(0.2, 0, math.radians(-170))
    traj = swing_spline(a, b, duration=0.6, dt=0.01)
    # the yaw channel passes through pi, not through zero
    mid_yaw = traj.samples[len(traj) // 2, 3]
    assert abs(mid_yaw) > math.radians(170)


def test_swing_spline_rejects_bad_duration():
    with pytest.raises(ValueError):
        swing_spline(Pose2(0, 0, 0), Pose2(0, 0, 0), duration=0.0)


# -- ZMP reference ------------------------------------------------------------

def test_zmp_reference_stationary():
    records = walk_records(0)
    traj = zmp_reference(records, GaitTiming(), dt=0.005)
    assert np.allclose(traj.samples, [0.0, 0.0])


def test_zmp_reference_visits_stance_centers_in_order():
    records = walk_records(2)
    traj = zmp_reference(records, GaitTiming(0.4, 0.1), dt=0.005)
    pts = traj.samples

    def hits(pose):
        return np.nonzero(np.hypot(pts[:, 0] - pose.x,
                                   pts[:, 1] - pose.y) < 1e-9)[0]

    first = hits(records[1].stance_pose)
    second = hits(records[2].stance_pose)
    assert len(first) and len(second)
    assert first[0] < second[0]


def test_zmp_reference_total_duration():
    timing = GaitTiming(0.8, 0.2, lead_in=0.0)
    records = walk_records(4)
    traj = zmp_reference(records, timing, dt=0.005)
    expected = 4 * (timing.single_support + timing.double_support)
    assert abs(traj.duration - expected) <= 0.005 + 1e-12
    with_lead = zmp_reference(records, GaitTiming(0.8, 0.2, lead_in=1.0),
                              dt=0.005)
    assert abs(with_lead.duration - (expected + 1.0)) <= 0.005 + 1e-12


# -- preview control ------------------------------------------------------------

def test_preview_constant_reference_is_equilibrium():
    ref = TimedTraj(0.005, np.tile([[0.3, -0.1]], (400, 1)))
    com, zmp = preview_com(ref, com_height=0.8, preview_horizon=1.6)
    assert np.max(np.abs(zmp.samples - ref.samples)) < 1e-6
    assert np.max(np.abs(com.samples - ref.samples)) < 1e-6


def test_preview_anticipates_step_change():
    n_before = 300
    ref = np.zeros((800, 2))
    ref[n_before:, 0] = 0.2
    com, zmp = preview_com(TimedTraj(0.005, ref), com_height=0.8,
                           preview_horizon=1.6)
    # CoM starts moving before the reference step
    assert com.samples[n_before - 50, 0] > 1e-4
    # tracking error vanishes after the step transient
    assert np.max(np.abs(zmp.samples[600:, 0] - 0.2)) < 1e-3


def test_preview_superposition():
    rng = np.random.default_rng(11)
    base = np.cumsum(rng.normal(0, 0.01, (500, 2)), axis=0)
    com1, zmp1 = preview_com(TimedTraj(0.005, base), 0.8, 1.6)
    com2, zmp2 = preview_com(TimedTraj(0.005, 2.5 * base), 0.8, 1.6)
    assert np.max(np.abs(com2.samples - 2.5 * com1.samples)) < 1e-9
    assert np.max(np.abs(zmp2.samples - 2.5 * zmp1.samples)) < 1e-9


def test_preview_realized_zmp_consistent_with_states():
    ref = zmp_reference(walk_records(3), GaitTiming(), dt=0.005)
    com, zmp, states = preview_com(ref, 0.8, 1.6, return_states=True)
    recomputed = states[:, 0, :] - (0.8 / 9.81) * states[:, 2, :]
    assert np.array_equal(recomputed, zmp.samples)
    assert np.array_equal(states[:, 0, :], com.samples)


def test_preview_rejects_bad_inputs():
    ref = TimedTraj(0.005, np.zeros((10, 2)))
    with pytest.raises(ValueError):
        preview_com(ref, com_height=0.0)
    with pytest.raises(ValueError):
        preview_com(ref, com_height=0.8, preview_horizon=0.5)


def test_six_step_gait_tracking_rms():
    # regression threshold for the acceptance criterion: RMS <= 0.02 m
    records = walk_records(6)
    timing = GaitTiming()
    ref = zmp_reference(records, timing, dt=0.005)
    com, zmp = preview_com(ref, com_height=0.8, preview_horizon=1.6)
    rms = float(np.sqrt(np.mean(np.sum((zmp.samples - ref.samples) ** 2,
                                       axis=1))))
    assert rms <= 0.02


# -- support region -------------------------------------------------------------

def test_support_stationary_margin_half_foot_length():
    records = walk_records(0)
    zmp = TimedTraj(0.005, np.zeros((50, 2)))
    report = zmp_in_support(zmp, records, GaitTiming())
    assert report.ok
    assert report.worst_margin == pytest.approx(0.12, abs=1e-9)


def test_support_far_zmp_fails():
    records = walk_records(0)
    zmp = TimedTraj(0.005, np.tile([[1.0, 0.0]], (10, 1)))
    report = zmp_in_support(zmp, records, GaitTiming())
    assert not report.ok
    assert report.worst_margin < 0


def test_support_full_gait_passes():
    records = walk_records(6)
    timing = GaitTiming()
    ref = zmp_reference(records, timing, dt=0.005)
    com, zmp = preview_com(ref, com_height=0.8, preview_horizon=1.6)
    report = zmp_in_support(zmp, records, timing)
    assert report.ok, [p for p in report.phases if not p.ok]
    assert report.worst_margin >= 0.0
    kinds = {p.kind for p in report.phases}
    assert kinds == {"single", "double"}


# -- export ----------------------------------------------------------------------

def test_sketch_csv_and_svg(tmp_path):
    records = walk_records(2)
    timing = GaitTiming(0.4, 0.1)
    ref = zmp_reference(records, timing, dt=0.01)
    com, zmp = preview_com(ref, 0.8, 1.6)
    csv = tmp_path / "sketch.csv"
    save_sketch_csv(csv, ref, com, zmp)
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "t,com_x,com_y,zmp_ref_x,zmp_ref_y,zmp_x,zmp_y"
    assert len(lines) == 1 + len(com)
    svg = tmp_path / "sketch.svg"
    sketch_svg(svg, records, zmp, com)
    text = svg.read_text()
    assert text.startswith("<svg")
    assert "polygon" in text and "polyline" in text
