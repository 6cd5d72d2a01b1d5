"""Rotation and pose primitives shared by the rest of the package.

Orientations are plain ``(3, 3)`` numpy arrays everywhere inside the
library. Quaternions only show up at file boundaries, always in
``[w, x, y, z]`` order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from .errors import SingularJacobian, ValidationError

ROTATION_TOL = 1e-9
SINGULAR_DET_TOL = 1e-12
QUAT_NORM_TOL = 1e-3
DEFAULT_FD_STEP = 1e-5


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    """True if ``R`` is a proper rotation (orthonormal, det = +1) within ``tol``."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    ortho = np.max(np.abs(R.T @ R - np.eye(3)))
    return bool(ortho <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def check_rotation(R, what: str = "orientation") -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if not is_rotation(R):
        raise ValidationError(f"{what} is not a proper rotation matrix")
    return R


def polar_rotation(J) -> np.ndarray:
    """Rotational factor of the polar decomposition ``J = J_rot @ P``.

    Computed from the SVD ``J = U S V^T`` as ``U diag(1, 1, d) V^T`` with
    ``d = det(U V^T)``, which is the rotation closest to ``J`` in the
    Frobenius norm.

    Raises
    ------
    SingularJacobian
        If ``|det J| <= 1e-12``; the deformation folds space at this point.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise SingularJacobian("Jacobian has non-finite entries")
    det = np.linalg.det(J)
    if abs(det) <= SINGULAR_DET_TOL:
        raise SingularJacobian(f"Jacobian is singular (det={det:.3e})")
    U, _, Vt = np.linalg.svd(J)
    d = np.sign(np.linalg.det(U @ Vt))
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def numerical_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x, h: float = DEFAULT_FD_STEP
) -> np.ndarray:
    """Central-difference Jacobian of ``f: R^3 -> R^3`` at ``x``.

    Column ``j`` is ``(f(x + h e_j) - f(x - h e_j)) / (2 h)``.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2.0 * h)
    return J


def quat_to_matrix(q) -> np.ndarray:
    """``[w, x, y, z]`` quaternion to rotation matrix.

    The quaternion is renormalized; a norm off from 1 by more than 1e-3 is
    rejected as corrupt input.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise ValidationError("quaternion must be 4 finite numbers [w, x, y, z]")
    n = np.linalg.norm(q)
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise ValidationError(f"quaternion norm {n:.6f} deviates from 1 by more than {QUAT_NORM_TOL}")
    w, x, y, z = q / n
    return _ScipyRotation.from_quat([x, y, z, w]).as_matrix()


def matrix_to_quat(R) -> np.ndarray:
    """Rotation matrix to ``[w, x, y, z]`` with ``w >= 0``."""
    x, y, z, w = _ScipyRotation.from_matrix(np.asarray(R, dtype=float)).as_quat()
    q = np.array([w, x, y, z])
    return -q if q[0] < 0 else q


def rotvec_to_matrix(rotvec) -> np.ndarray:
    return _ScipyRotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()


def matrix_to_rotvec(R) -> np.ndarray:
    return _ScipyRotation.from_matrix(np.asarray(R, dtype=float)).as_rotvec()


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    # uniform on SO(3) via a normalized Gaussian quaternion
    q = rng.normal(size=4)
    return quat_to_matrix(q / np.linalg.norm(q))


def geodesic_step(R_from, R_to, fraction: float) -> np.ndarray:
    """Move from ``R_from`` toward ``R_to`` along the geodesic by ``fraction``."""
    if fraction == 1.0:
        return np.array(R_to, dtype=float)
    R_from = np.asarray(R_from, dtype=float)
    delta = matrix_to_rotvec(R_from.T @ np.asarray(R_to, dtype=float))
    return R_from @ rotvec_to_matrix(fraction * delta)


def rotation_distance(R_a, R_b) -> float:
    """Geodesic angle in radians between two rotations."""
    return float(np.linalg.norm(matrix_to_rotvec(np.asarray(R_a).T @ np.asarray(R_b))))


@dataclass(frozen=True)
class Pose:
    """Position in meters plus orientation matrix."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValidationError("pose position must be 3 finite numbers")
        R = check_rotation(np.array(self.orientation, dtype=float))
        p.flags.writeable = False
        R.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", R)
