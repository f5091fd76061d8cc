"""Rotation parameterizations: unit quaternions in 3D, a single angle in 2D.

``rot_from_quat(q)`` maps outer (drum-fixed) coordinates to director
coordinates, ``z = R(q) @ z_outer``.  With ``dq/dt = quat_rate(w, q)`` the
matrix obeys ``dR/dt = -w x R``.
"""

from __future__ import annotations

import math

import numpy as np

NORM_TOL = 1e-10


def _rot(q: np.ndarray) -> np.ndarray:
    q0, q1, q2, q3 = (q[..., i] for i in range(4))
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = q1 * q1 - q2 * q2 - q3 * q3 + q0 * q0
    R[..., 0, 1] = 2 * (q1 * q2 - q0 * q3)
    R[..., 0, 2] = 2 * (q1 * q3 + q0 * q2)
    R[..., 1, 0] = 2 * (q1 * q2 + q0 * q3)
    R[..., 1, 1] = -q1 * q1 + q2 * q2 - q3 * q3 + q0 * q0
    R[..., 1, 2] = 2 * (q2 * q3 - q0 * q1)
    R[..., 2, 0] = 2 * (q1 * q3 - q0 * q2)
    R[..., 2, 1] = 2 * (q2 * q3 + q0 * q1)
    R[..., 2, 2] = -q1 * q1 - q2 * q2 + q3 * q3 + q0 * q0
    return R


def rot_from_quat(q, tol: float = NORM_TOL) -> np.ndarray:
    """Rotation matrix of a unit quaternion ``(q0, q1, q2, q3)``.

    Raises ``ValueError`` if ``|q|`` differs from one by more than ``tol``;
    callers holding drifted quaternions must normalize first.
    """
    q = np.asarray(q, dtype=float)
    norms = np.linalg.norm(q, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise ValueError(f"quaternion not of unit length (|q| = {norms})")
    return _rot(q)


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Unchecked variant for the residual hot path (Newton iterates drift)."""
    return _rot(q)


def quat_rate(w, q) -> np.ndarray:
    """``A(w) @ q`` with the skew-symmetric 4x4 kinematic matrix (factor 1/2)."""
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    w1, w2, w3 = w[..., 0], w[..., 1], w[..., 2]
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(np.broadcast_shapes(w.shape[:-1], q.shape[:-1]) + (4,))
    out[..., 0] = 0.5 * (w1 * q1 + w2 * q2 + w3 * q3)
    out[..., 1] = 0.5 * (-w1 * q0 + w3 * q2 - w2 * q3)
    out[..., 2] = 0.5 * (-w2 * q0 - w3 * q1 + w1 * q3)
    out[..., 3] = 0.5 * (-w3 * q0 + w2 * q1 - w1 * q2)
    return out


def quat_matrix(w) -> np.ndarray:
    w1, w2, w3 = np.asarray(w, dtype=float)
    return 0.5 * np.array([
        [0.0, w1, w2, w3],
        [-w1, 0.0, w3, -w2],
        [-w2, -w3, 0.0, w1],
        [-w3, w2, -w1, 0.0],
    ])


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def canonical_sign(q) -> np.ndarray:
    """Pick the representative with q0 >= 0 (R(q) = R(-q))."""
    q = np.asarray(q, dtype=float)
    return np.where(q[..., :1] < 0, -q, q)


def rot2d(alpha) -> np.ndarray:
    s, c = np.sin(alpha), np.cos(alpha)
    return np.stack([np.stack([s, -c], axis=-1), np.stack([c, s], axis=-1)], axis=-2)


def nozzle_quaternion() -> np.ndarray:
    """Quaternion of the nozzle frame d1 = a1, d2 = -a3, d3 = a2."""
    h = math.sqrt(0.5)
    return np.array([h, h, 0.0, 0.0])


def quat_from_angle(alpha) -> np.ndarray:
    """3D quaternion whose R(q) embeds the planar ``rot2d(alpha)``.

    The planar block is a rotation about the first axis by ``pi/2 - alpha``.
    """
    half = 0.5 * (0.5 * np.pi - np.asarray(alpha, dtype=float))
    zero = np.zeros_like(half)
    return np.stack([np.cos(half), np.sin(half), zero, zero], axis=-1)


def angle_from_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return 0.5 * np.pi - 2.0 * np.arctan2(q[..., 1], q[..., 0])
