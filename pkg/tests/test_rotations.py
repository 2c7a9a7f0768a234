import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kinebody.errors import DegenerateInputError
from kinebody.rotations import (
    axis_angle_to_matrix,
    is_rotation,
    matrix_to_axis_angle,
    matrix_to_rot6d,
    quaternion_to_matrix,
    random_rotations,
    rot6d_backward,
    rot6d_to_matrix,
    rotation_about,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_canonical_6d_is_identity():
    assert np.array_equal(rot6d_to_matrix(np.array([1, 0, 0, 0, 1, 0.0])), np.eye(3))


def test_scaled_and_sheared_columns_still_identity():
    R = rot6d_to_matrix(np.array([2, 0, 0, 1, 1, 0.0]))
    assert np.allclose(R, np.eye(3), atol=1e-15)


def test_6d_layout_is_first_two_columns():
    R = rotation_about([0, 0, 1], 0.3)
    r = matrix_to_rot6d(R)
    assert np.array_equal(r[:3], R[:, 0])
    assert np.array_equal(r[3:], R[:, 1])


@pytest.mark.parametrize("r", [np.zeros(6), [1, 0, 0, 2, 0, 0], [0, 0, 0, 0, 1, 0], [1e-9, 0, 0, 0, 1, 0]])
def test_degenerate_6d_raises(r):
    with pytest.raises(DegenerateInputError):
        rot6d_to_matrix(np.asarray(r, dtype=float))


def test_round_trip_random_rotations(rng):
    R = random_rotations(rng, 2000)
    assert np.max(np.abs(rot6d_to_matrix(matrix_to_rot6d(R)) - R)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 6, elements=finite))
def test_any_nondegenerate_6d_gives_proper_rotation(r):
    a1, a2 = r[:3], r[3:]
    n1 = np.linalg.norm(a1)
    if n1 < 1e-3 or np.linalg.norm(a2 - (a2 @ a1) / n1**2 * a1) < 1e-3:
        return
    R = rot6d_to_matrix(r)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1.0) < 1e-12
    # first column is the normalized a1
    assert np.allclose(R[:, 0], a1 / n1, atol=1e-12)


def test_rot6d_backward_matches_finite_differences(rng):
    r = rng.standard_normal((4, 6))
    G = rng.standard_normal((4, 3, 3))
    analytic = rot6d_backward(r, G)
    h = 1e-6
    num = np.zeros_like(r)
    for idx in np.ndindex(r.shape):
        rp, rm = r.copy(), r.copy()
        rp[idx] += h
        rm[idx] -= h
        num[idx] = np.sum(G * (rot6d_to_matrix(rp) - rot6d_to_matrix(rm))) / (2 * h)
    assert np.max(np.abs(analytic - num)) < 1e-7


def test_rodrigues_against_explicit_z_rotation():
    c, s = math.cos(0.7), math.sin(0.7)
    expected = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert np.allclose(axis_angle_to_matrix(np.array([0, 0, 0.7])), expected, atol=1e-15)


def test_tiny_angle_uses_series():
    aa = np.array([1e-12, -2e-12, 0.5e-12])
    R = axis_angle_to_matrix(aa)
    x, y, z = aa
    first_order = np.eye(3) + np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    assert np.allclose(R, first_order, rtol=0, atol=1e-20)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-3.0, 3.0)))
def test_axis_angle_round_trip(aa):
    R = axis_angle_to_matrix(aa)
    back = axis_angle_to_matrix(matrix_to_axis_angle(R))
    assert np.allclose(back, R, atol=1e-9)


def test_near_pi_axis_angle():
    axis = np.array([1.0, 2.0, -0.5]) / np.linalg.norm([1.0, 2.0, -0.5])
    R = axis_angle_to_matrix(axis * (math.pi - 1e-9))
    assert np.allclose(axis_angle_to_matrix(matrix_to_axis_angle(R)), R, atol=1e-8)


def test_quaternion_and_uniform_sampler(rng):
    assert np.allclose(quaternion_to_matrix(np.array([1.0, 0, 0, 0])), np.eye(3))
    R = random_rotations(rng, 500)
    assert is_rotation(R, atol=1e-12)
    # uniform on SO(3): E[trace] = 0
    assert abs(np.trace(R, axis1=1, axis2=2).mean()) < 0.15
