"""Quaternion and rotation algebra for rigid-body attitude work.

Quaternions are length-4 arrays ordered vector part first, ``[qx, qy, qz, q4]``,
with the scalar component last. ``dcm_from_quat`` maps inertial-frame vectors
into the body frame, so the identity quaternion ``[0, 0, 0, 1]`` corresponds to
the body frame being aligned with the inertial frame.

Renormalization is explicit: integrators call :func:`normalize` after each
step rather than having constructors hide the drift.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "QUAT_IDENTITY",
    "UNIT_NORM_TOL",
    "skew",
    "dcm_from_quat",
    "kin_matrix",
    "normalize",
]

QUAT_IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])

# Acceptable deviation from unit norm on quaternion inputs.
UNIT_NORM_TOL = 1e-6


def _require_unit(q: np.ndarray, tol: float = UNIT_NORM_TOL) -> None:
    n = np.linalg.norm(q)
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion norm {n:.9g} deviates from 1 by more than {tol:g}")


def skew(a) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that ``skew(a) @ b == cross(a, b)``."""
    ax, ay, az = np.asarray(a, dtype=float)
    return np.array([
        [0.0, -az, ay],
        [az, 0.0, -ax],
        [-ay, ax, 0.0],
    ])


def dcm_from_quat(q) -> np.ndarray:
    """Direction cosine matrix of a unit quaternion.

    C(q) = (q4^2 - qv.qv) I + 2 qv qv^T - 2 q4 [qv]x, an element of SO(3)
    mapping inertial coordinates to body coordinates. The input must be unit
    within :data:`UNIT_NORM_TOL`.
    """
    q = np.asarray(q, dtype=float)
    _require_unit(q)
    qv, q4 = q[:3], q[3]
    return (
        (q4 * q4 - qv @ qv) * np.eye(3)
        + 2.0 * np.outer(qv, qv)
        - 2.0 * q4 * skew(qv)
    )


def kin_matrix(q) -> np.ndarray:
    """Attitude kinematics matrix W(q), 4x3, with q_dot = W(q) @ omega.

    W(q) = (1/2) [[q4 I + [qv]x], [-qv^T]]. For any unit q the product
    q . (W(q) omega) vanishes, so the kinematics preserve the norm.
    """
    q = np.asarray(q, dtype=float)
    _require_unit(q)
    qv, q4 = q[:3], q[3]
    out = np.empty((4, 3))
    out[:3, :] = 0.5 * (q4 * np.eye(3) + skew(qv))
    out[3, :] = -0.5 * qv
    return out


def normalize(q) -> np.ndarray:
    """Rescale a quaternion to unit norm, preserving its direction.

    Raises ValueError for inputs with norm at or below 1e-12, where the
    direction is numerically meaningless.
    """
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n <= 1e-12:
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n
