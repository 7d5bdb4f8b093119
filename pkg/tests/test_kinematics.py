import math

import pytest
from hypothesis import given, strategies as st

from overrow.kinematics import (BodyTwist, Pose, STRAIGHT, WheelSpeeds, body_twist,
                                integrate_pose, normalize_angle, turning_radius)

speeds = st.floats(-5.0, 5.0, allow_nan=False)
tracks = st.floats(0.5, 3.0)


def test_body_twist_straight_line():
    t = body_twist(WheelSpeeds(1.0, 1.0), 1.42)
    assert t.v == pytest.approx(1.0)
    assert t.omega == 0.0


def test_body_twist_in_place():
    t = body_twist(WheelSpeeds(-0.5, 0.5), 1.42)
    assert t.v == 0.0
    assert t.omega == pytest.approx(1.0 / 1.42)
    assert t.omega == pytest.approx(0.7042, abs=1e-4)


def test_body_twist_single_wheel():
    t = body_twist(WheelSpeeds(0.0, 0.8), 1.52)
    assert t.v == pytest.approx(0.4)
    assert t.omega == pytest.approx(0.5263, abs=1e-4)


def test_body_twist_rejects_bad_track():
    with pytest.raises(ValueError):
        body_twist(WheelSpeeds(1.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        body_twist(WheelSpeeds(1.0, 1.0), -1.0)


def test_turning_radius_in_place_is_zero():
    for v in (0.1, 0.85, 3.0):
        assert turning_radius(WheelSpeeds(-v, v), 1.42) == 0.0


def test_turning_radius_pivot_is_half_track():
    # one wheel parked: |R| = track/2 exactly
    assert abs(turning_radius(WheelSpeeds(0.5, 0.0), 1.42)) == pytest.approx(0.71)
    assert turning_radius(WheelSpeeds(0.0, 0.5), 1.42) == pytest.approx(0.71)
    assert abs(turning_radius(WheelSpeeds(0.3, 0.0), 1.52)) == pytest.approx(0.76)


def test_turning_radius_straight_marker():
    assert turning_radius(WheelSpeeds(0.7, 0.7), 1.42) is STRAIGHT
    assert turning_radius(WheelSpeeds(0.7, 0.7 + 1e-12), 1.42) is STRAIGHT


@given(v=st.floats(0.01, 5.0), track=tracks)
def test_pivot_law_exact(v, track):
    assert turning_radius(WheelSpeeds(0.0, v), track) == track / 2.0


@given(v=st.floats(0.01, 5.0), track=tracks)
def test_in_place_law_exact(v, track):
    assert turning_radius(WheelSpeeds(-v, v), track) == 0.0


def test_integrate_straight():
    p = integrate_pose(Pose(), BodyTwist(1.0, 0.0), 2.0)
    assert (p.x, p.y, p.theta) == (2.0, 0.0, 0.0)


def test_integrate_rotation_in_place():
    p = integrate_pose(Pose(), BodyTwist(0.0, math.pi / 2), 1.0)
    assert p.x == 0.0 and p.y == 0.0
    assert p.theta == pytest.approx(math.pi / 2)


def test_integrate_rejects_bad_dt():
    with pytest.raises(ValueError):
        integrate_pose(Pose(), BodyTwist(1.0, 0.0), 0.0)


def test_circle_closure_against_fine_composition():
    # oracle: compose 10^4 fine steps; both must land on the start within 1e-9
    twist = BodyTwist(0.5, 0.5)
    total = 2.0 * math.pi / twist.omega
    p_fine = Pose()
    n = 10_000
    for _ in range(n):
        p_fine = integrate_pose(p_fine, twist, total / n)
    p_one = integrate_pose(Pose(), twist, total)
    assert math.hypot(p_fine.x, p_fine.y) < 1e-9
    assert math.hypot(p_one.x, p_one.y) < 1e-9
    assert abs(normalize_angle(p_fine.theta)) < 1e-9
    assert math.hypot(p_fine.x - p_one.x, p_fine.y - p_one.y) < 1e-9


@given(v=speeds, omega=st.floats(-3.0, 3.0), dt1=st.floats(0.001, 2.0),
       dt2=st.floats(0.001, 2.0), theta=st.floats(-math.pi, math.pi))
def test_composition(v, omega, dt1, dt2, theta):
    twist = BodyTwist(v, omega)
    start = Pose(0.3, -0.7, theta)
    whole = integrate_pose(start, twist, dt1 + dt2)
    split = integrate_pose(integrate_pose(start, twist, dt1), twist, dt2)
    assert whole.x == pytest.approx(split.x, abs=1e-12)
    assert whole.y == pytest.approx(split.y, abs=1e-12)
    assert normalize_angle(whole.theta - split.theta) == pytest.approx(0.0, abs=1e-12)


def test_radius_consistency_along_trajectory():
    # distance from the instantaneous center of rotation stays |V/omega|
    twist = BodyTwist(0.8, 0.4)
    r = twist.v / twist.omega
    p = Pose()
    cx, cy = p.x - r * math.sin(p.theta), p.y + r * math.cos(p.theta)
    for _ in range(200):
        p = integrate_pose(p, twist, 0.05)
        assert math.hypot(p.x - cx, p.y - cy) == pytest.approx(abs(r), abs=1e-9)


def test_heading_normalized_half_open():
    assert Pose(0, 0, math.pi).theta == pytest.approx(math.pi)
    assert Pose(0, 0, -math.pi).theta == pytest.approx(math.pi)
    assert Pose(0, 0, 3 * math.pi / 2).theta == pytest.approx(-math.pi / 2)
    p = integrate_pose(Pose(0, 0, 3.0), BodyTwist(0.0, 1.0), 1.0)
    assert -math.pi < p.theta <= math.pi


@given(theta=st.floats(-50.0, 50.0))
def test_normalize_angle_range_and_identity(theta):
    wrapped = normalize_angle(theta)
    assert -math.pi < wrapped <= math.pi
    assert math.sin(wrapped) == pytest.approx(math.sin(theta), abs=1e-9)
    assert math.cos(wrapped) == pytest.approx(math.cos(theta), abs=1e-9)


def test_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        Pose(math.nan, 0, 0)
    with pytest.raises(ValueError):
        WheelSpeeds(math.inf, 0)
