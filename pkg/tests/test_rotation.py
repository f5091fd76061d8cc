import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spinrod.rotation import (angle_from_quat, canonical_sign, nozzle_quaternion, quat_from_angle,
                              quat_matrix, quat_normalize, quat_rate, rot2d, rot_from_quat)

finite = st.floats(-5, 5, allow_nan=False)
quats = arrays(float, 4, elements=finite).filter(lambda q: np.linalg.norm(q) > 1e-3).map(quat_normalize)
vecs = arrays(float, 3, elements=finite)


def _skew(w):
    return np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])


@given(quats)
def test_rotation_is_orthogonal(q):
    R = rot_from_quat(q)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


@given(quats)
def test_sign_invariance(q):
    np.testing.assert_allclose(rot_from_quat(q), rot_from_quat(-q), atol=1e-14)
    assert canonical_sign(q)[0] >= 0


@settings(deadline=None)
@given(quats, vecs)
def test_kinematics_match_rotation_rate(q, w):
    # dR/dt = -w x R along dq/dt = A(w) q
    h = 1e-6
    dR = (rot_from_quat(q + h * quat_rate(w, q), tol=1e-3) - rot_from_quat(q - h * quat_rate(w, q), tol=1e-3)) / (2 * h)
    np.testing.assert_allclose(dR, -_skew(w) @ rot_from_quat(q), atol=1e-6)


@given(quats, vecs)
def test_kinematic_matrix_preserves_norm(q, w):
    assert abs(q @ quat_rate(w, q)) < 1e-12
    M = quat_matrix(w)
    np.testing.assert_allclose(M, -M.T)
    np.testing.assert_allclose(M @ q, quat_rate(w, q), atol=1e-14)


def test_nozzle_frame():
    R = rot_from_quat(nozzle_quaternion())
    expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    np.testing.assert_allclose(R, expected, atol=1e-15)


def test_rejects_non_unit():
    with pytest.raises(ValueError):
        rot_from_quat([1.0, 0.1, 0.0, 0.0])
    with pytest.raises(ValueError):
        quat_normalize(np.zeros(4))


@given(st.floats(-np.pi / 2, 0.0))
def test_planar_embedding(alpha):
    R = rot_from_quat(quat_from_angle(alpha))
    np.testing.assert_allclose(R[1:, 1:], rot2d(alpha), atol=1e-14)
    np.testing.assert_allclose(R[0], [1, 0, 0], atol=1e-14)
    assert angle_from_quat(quat_from_angle(alpha)) == pytest.approx(alpha, abs=1e-13)


def test_angle_zero_is_nozzle():
    np.testing.assert_allclose(quat_from_angle(0.0), nozzle_quaternion(), atol=1e-15)
