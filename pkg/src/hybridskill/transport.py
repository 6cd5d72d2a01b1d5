"""Keypoint-driven space deformation and demonstration transport.

The deformation is an interpolating polyharmonic spline with kernel
``k(r) = r`` plus an affine term::

    phi(q) = A q + b + sum_i w_i * ||q - s_i||

The affine term reproduces any affine (in particular rigid) keypoint motion
exactly, and the kernel part absorbs the non-rigid remainder. Positions are
transported by ``phi`` itself; orientations by the rotational polar factor of
its Jacobian, evaluated at the original sample positions.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .demonstration import Demonstration, TransportedDemonstration
from .errors import CountMismatch, DegenerateSystem, ParseError, SingularJacobian, ValidationError
from .geometry import polar_rotation

logger = logging.getLogger(__name__)

DEFAULT_REGULARIZATION = 1e-10
MAX_CONDITION = 1e14
DISTINCT_TOL = 1e-9
# singular values of the centered keypoints below this fraction of the largest
# are treated as a missing spatial direction (collinear / coplanar sets)
RANK_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class KeypointSet:
    """Ordered, registered keypoints; index ``i`` matches across source and target."""

    points: np.ndarray
    label: str = "source"
    check_distinct: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 3:
            pts = pts.reshape(1, 3)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise ValidationError(f"{self.label} keypoints must be a non-empty list of 3-vectors")
        if not np.all(np.isfinite(pts)):
            raise ValidationError(f"{self.label} keypoints must be finite")
        if self.check_distinct:
            pairs = self.duplicate_pairs(pts)
            if pairs:
                i, j = pairs[0]
                raise ValidationError(f"{self.label} keypoints {i} and {j} coincide")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @staticmethod
    def duplicate_pairs(points, tol: float = DISTINCT_TOL) -> list[tuple[int, int]]:
        pts = np.asarray(points, dtype=float)
        d = cdist(pts, pts)
        i, j = np.nonzero(np.triu(d <= tol, k=1))
        return list(zip(i.tolist(), j.tolist()))


def load_keypoints(path, label: str = "source") -> KeypointSet:
    """Read ``{"points": [[x, y, z], ...]}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or set(data) != {"points"}:
        raise ParseError(f"{path}: keypoint file must be an object with the single field 'points'")
    pts = data["points"]
    if not isinstance(pts, list) or not all(isinstance(p, list) and len(p) == 3 for p in pts):
        raise ParseError(f"{path}: 'points' must be a list of [x, y, z]")
    try:
        arr = np.array(pts, dtype=float).reshape(-1, 3)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return KeypointSet(arr, label)


def save_keypoints(keypoints: KeypointSet, path) -> None:
    Path(path).write_text(json.dumps({"points": keypoints.points.tolist()}) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class DeformationMap:
    """Fitted map ``phi(q) = linear @ q + offset + sum_i weights[i] * |q - centers[i]|``."""

    linear: np.ndarray
    offset: np.ndarray
    centers: np.ndarray
    weights: np.ndarray
    regularization: float = 0.0

    def __post_init__(self):
        for name in ("linear", "offset", "centers", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls) -> "DeformationMap":
        return cls(np.eye(3), np.zeros(3), np.zeros((0, 3)), np.zeros((0, 3)))

    def evaluate(self, q) -> np.ndarray:
        """Map a point ``(3,)`` or a batch ``(K, 3)``."""
        q = np.asarray(q, dtype=float)
        pts = np.atleast_2d(q)
        out = pts @ self.linear.T + self.offset
        if len(self.centers):
            out = out + cdist(pts, self.centers) @ self.weights
        return out[0] if q.ndim == 1 else out

    __call__ = evaluate

    def jacobian(self, q) -> np.ndarray:
        """Analytic Jacobian at ``q`` (shape ``(3, 3)``) or a batch (``(K, 3, 3)``).

        The kernel gradient ``(q - s_i) / |q - s_i|`` is undefined at a center;
        there that center's term is taken as zero.
        """
        q = np.asarray(q, dtype=float)
        pts = np.atleast_2d(q)
        J = np.broadcast_to(self.linear, (len(pts), 3, 3)).copy()
        if len(self.centers):
            diff = pts[:, None, :] - self.centers[None, :, :]
            r = np.linalg.norm(diff, axis=2)
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[..., None] > 0, diff / r[..., None], 0.0)
            J += np.einsum("nd,knj->kdj", self.weights, unit)
        return J[0] if q.ndim == 1 else J

    def residuals(self, source: KeypointSet, target: KeypointSet) -> np.ndarray:
        """Per-keypoint interpolation error ``|phi(s_i) - t_i|``."""
        return np.linalg.norm(self.evaluate(source.points) - target.points, axis=1)


def fit(source: KeypointSet, target: KeypointSet, regularization: float = DEFAULT_REGULARIZATION) -> DeformationMap:
    """Fit the deformation taking each source keypoint onto its target.

    Parameters
    ----------
    source, target : KeypointSet
        Registered keypoint sets of equal size ``N``.
    regularization : float
        Ridge ``lambda >= 0`` on the kernel block. Interpolation then holds up
        to ``lambda * |w_i|`` per keypoint; a small positive value keeps
        coincident keypoints solvable.

    Notes
    -----
    With ``N >= 4`` keypoints spanning 3-D space the affine part is a full
    3x3 fit. For fewer or flat keypoint sets the affine part only acts
    inside the span of the keypoints and stays the identity across it. Two
    keypoints are matched by a similarity (translation, rotation of the
    segment direction, uniform scale).

    Raises
    ------
    CountMismatch
        If the sets differ in size.
    DegenerateSystem
        If the kernel system's condition number exceeds 1e14.
    """
    if len(source) != len(target):
        raise CountMismatch(f"{len(source)} source keypoints vs {len(target)} target keypoints")
    if regularization < 0:
        raise ValueError("regularization must be non-negative")
    S = source.points
    T = target.points
    if len(S) == 2:
        return _fit_similarity(S, T)

    center = S.mean(axis=0)
    _, sv, Vt = np.linalg.svd(S - center)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank == 3:
        basis = np.eye(3)
    else:
        basis = Vt[:rank].T
    n = len(S)
    P = np.hstack([np.ones((n, 1)), (S - center) @ basis])
    k = P.shape[1]
    system = np.zeros((n + k, n + k))
    system[:n, :n] = cdist(S, S) - regularization * np.eye(n)
    system[:n, n:] = P
    system[n:, :n] = P.T
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateSystem(
            f"kernel system condition {cond:.3e} exceeds {MAX_CONDITION:.0e}; keypoints may coincide"
        )
    rhs = np.zeros((n + k, 3))
    rhs[:n] = T - S
    sol = np.linalg.solve(system, rhs)
    weights, coeffs = sol[:n], sol[n:]
    # displacement affine part: coeffs[0] + ((q - center) @ basis) @ coeffs[1:]
    lin_disp = basis @ coeffs[1:]
    linear = np.eye(3) + lin_disp.T
    offset = coeffs[0] - lin_disp.T @ center
    return DeformationMap(linear, offset, S.copy(), weights, float(regularization))


def _fit_similarity(S: np.ndarray, T: np.ndarray) -> DeformationMap:
    ds, dt = S[1] - S[0], T[1] - T[0]
    ls, lt = np.linalg.norm(ds), np.linalg.norm(dt)
    if ls <= DISTINCT_TOL:
        raise DegenerateSystem("the two source keypoints coincide")
    u, v = ds / ls, dt / lt if lt > 0 else ds / ls
    R = _align(u, v)
    linear = (lt / ls) * R
    offset = T[0] - linear @ S[0]
    return DeformationMap(linear, offset, np.zeros((0, 3)), np.zeros((0, 3)), 0.0)


def _align(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Smallest rotation taking unit vector ``u`` onto unit vector ``v``."""
    axis = np.cross(u, v)
    s, c = np.linalg.norm(axis), float(np.dot(u, v))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # antiparallel: half turn about any axis normal to u
        perp = np.cross(u, np.eye(3)[np.argmin(np.abs(u))])
        perp /= np.linalg.norm(perp)
        return 2.0 * np.outer(perp, perp) - np.eye(3)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]) / s
    angle = np.arctan2(s, c)
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def transport_positions(phi: DeformationMap, demo: Demonstration) -> np.ndarray:
    return phi.evaluate(demo.positions)


def transport_orientations(phi: DeformationMap, demo: Demonstration) -> np.ndarray:
    """Rotate each orientation by the polar factor of the Jacobian at its sample."""
    jacobians = phi.jacobian(demo.positions)
    out = np.empty_like(demo.orientations)
    for i, (J, R) in enumerate(zip(jacobians, demo.orientations)):
        try:
            out[i] = polar_rotation(J) @ R
        except SingularJacobian as exc:
            raise SingularJacobian(f"{exc} at sample {i}", index=i) from None
    return out


def transport_demonstration(phi: DeformationMap, demo: Demonstration) -> TransportedDemonstration:
    """Carry positions and orientations through ``phi``; servos and timing are unchanged."""
    return TransportedDemonstration(
        positions=transport_positions(phi, demo),
        orientations=transport_orientations(phi, demo),
        servos=demo.servos,
        sample_period=demo.sample_period,
    )
