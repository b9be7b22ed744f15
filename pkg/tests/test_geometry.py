import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadland.geometry import (
    FramePose,
    GimbalLock,
    body_rates_from_euler_rates,
    euler_from_rotation,
    euler_rates_from_body_rates,
    rotation_from_euler,
    rotation_from_rotvec,
    transform_point,
)

angle = st.floats(-math.pi, math.pi, allow_nan=False)
safe_pitch = st.floats(-1.4, 1.4, allow_nan=False)


def test_zero_angles_give_identity():
    assert np.array_equal(rotation_from_euler((0, 0, 0)), np.eye(3))
    assert np.array_equal(euler_from_rotation(np.eye(3)), np.zeros(3))


def test_yaw_quarter_turn_maps_body_x_to_world_y():
    R = rotation_from_euler((0, 0, math.pi / 2))
    assert np.allclose(R[:, 0], [0, 1, 0], atol=1e-15)


def test_single_axis_roll_and_pitch():
    a = 0.3
    Rx = rotation_from_euler((a, 0, 0))
    assert np.allclose(Rx, [[1, 0, 0], [0, math.cos(a), -math.sin(a)], [0, math.sin(a), math.cos(a)]])
    Ry = rotation_from_euler((0, a, 0))
    assert np.allclose(Ry, [[math.cos(a), 0, math.sin(a)], [0, 1, 0], [-math.sin(a), 0, math.cos(a)]])


def test_round_trip_fixed_angles():
    out = euler_from_rotation(rotation_from_euler((0.1, 0.2, 0.3)))
    assert np.allclose(out, (0.1, 0.2, 0.3), atol=1e-9)


def test_round_trip_random_triples():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = rng.uniform(-1.4, 1.4, size=3)
        assert np.max(np.abs(euler_from_rotation(rotation_from_euler(a)) - a)) < 1e-9


def test_gimbal_lock_on_inverse():
    R = rotation_from_euler((0.0, math.pi / 2, 0.0))
    assert R[2, 0] == pytest.approx(-1.0)
    with pytest.raises(GimbalLock):
        euler_from_rotation(R)


def test_euler_rates_examples():
    assert np.array_equal(euler_rates_from_body_rates((0.4, -0.3, 2.0), np.zeros(3)), np.zeros(3))
    w = np.array([0.3, -1.2, 0.7])
    assert np.array_equal(euler_rates_from_body_rates((0, 0, 1.1), w), w)
    with pytest.raises(GimbalLock):
        euler_rates_from_body_rates((0.0, math.pi / 2, 0.0), w)


def test_transform_point_examples():
    p = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(transform_point(FramePose(), p), p)
    assert np.array_equal(transform_point(FramePose(translation=[0, 0, 1]), p), [1, 2, 4])


def test_composition_matches_sequential_application():
    rng = np.random.default_rng(2)
    for _ in range(100):
        A = FramePose(rotation_from_rotvec(rng.normal(size=3)), rng.normal(size=3))
        B = FramePose(rotation_from_rotvec(rng.normal(size=3)), rng.normal(size=3))
        p = rng.normal(size=3)
        assert np.max(np.abs(A.compose(B).apply(p) - A.apply(B.apply(p)))) <= 1e-12


def test_inverse_undoes_pose():
    pose = FramePose(rotation_from_euler((0.2, -0.1, 1.0)), [1.0, -2.0, 0.5])
    p = np.array([0.3, 0.4, -0.6])
    assert np.allclose(pose.inverse().apply(pose.apply(p)), p, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.tuples(angle, angle, angle))
def test_rotation_is_orthonormal(a):
    R = rotation_from_euler(a)
    assert np.max(np.abs(R.T @ R - np.eye(3))) <= 1e-9
    assert abs(np.linalg.det(R) - 1.0) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(angle, safe_pitch, angle)
def test_round_trip_property(r, p, y):
    out = euler_from_rotation(rotation_from_euler((r, p, y)))
    assert np.max(np.abs(out - (r, p, y))) < 1e-9 or (abs(abs(r) - math.pi) < 1e-9 or abs(abs(y) - math.pi) < 1e-9)


@settings(max_examples=200, deadline=None)
@given(angle, safe_pitch, st.tuples(*[st.floats(-5, 5)] * 3))
def test_euler_rate_maps_are_inverse(r, p, w):
    rates = euler_rates_from_body_rates((r, p, 0.0), w)
    assert np.allclose(body_rates_from_euler_rates((r, p, 0.0), rates), w, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.floats(-5, 5)] * 3))
def test_level_attitude_rates_are_identity(w):
    assert np.array_equal(euler_rates_from_body_rates((0.0, 0.0, 0.7), w), np.asarray(w))
