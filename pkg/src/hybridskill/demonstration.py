"""Kinesthetic demonstrations: data model, validation, JSON I/O, synthesis.

A demonstration is the triple of per-sample labels recorded while teaching:
end-effector positions (meters), orientations (rotation matrices) and the
two cable-servo positions (radians; channel 0 bends, channel 1 twists).
Samples are uniformly spaced by ``sample_period`` seconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.spatial.transform import Rotation as _ScipyRotation
from scipy.spatial.transform import Slerp

from .errors import InvalidScenario, ParseError, ValidationError
from .geometry import ROTATION_TOL, matrix_to_quat, quat_to_matrix

DEFAULT_JUMP_LIMIT = 0.05
DWELL_LENGTH = 0.02
DEMO_FIELDS = frozenset({"sample_period", "positions", "orientations", "servos"})


@dataclass(frozen=True, eq=False)
class Demonstration:
    """Validated, immutable demonstration.

    Arrays are stored read-only with shapes ``(M, 3)``, ``(M, 3, 3)`` and
    ``(M, 2)``. Construction raises :class:`ValidationError` naming the
    first violated invariant and the offending sample index.
    """

    positions: np.ndarray
    orientations: np.ndarray
    servos: np.ndarray
    sample_period: float
    jump_limit: float = DEFAULT_JUMP_LIMIT

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        rot = np.array(self.orientations, dtype=float)
        srv = np.array(self.servos, dtype=float)
        if not (len(pos) == len(rot) == len(srv)):
            raise ValidationError(
                f"length mismatch: {len(pos)} positions, {len(rot)} orientations, {len(srv)} servos"
            )
        m = len(pos)
        if m < 2:
            raise ValidationError(f"demonstration needs at least 2 samples, got {m}")
        if pos.shape != (m, 3) or rot.shape != (m, 3, 3) or srv.shape != (m, 2):
            raise ValidationError("bad array shapes: expected (M,3) positions, (M,3,3) orientations, (M,2) servos")
        period = float(self.sample_period)
        if not (np.isfinite(period) and period > 0):
            raise ValidationError(f"sample_period must be positive, got {self.sample_period}")
        for name, arr in (("position", pos), ("orientation", rot), ("servo", srv)):
            bad = ~np.all(np.isfinite(arr.reshape(m, -1)), axis=1)
            if bad.any():
                raise ValidationError(f"non-finite {name} at sample {int(np.argmax(bad))}")
        neg = np.any(srv < 0, axis=1)
        if neg.any():
            raise ValidationError(f"negative servo at sample {int(np.argmax(neg))}")
        ortho = np.max(np.abs(np.einsum("mji,mjk->mik", rot, rot) - np.eye(3)), axis=(1, 2))
        dets = np.linalg.det(rot)
        bad = (ortho > ROTATION_TOL) | (np.abs(dets - 1.0) > ROTATION_TOL)
        if bad.any():
            raise ValidationError(f"orientation not in SO(3) at sample {int(np.argmax(bad))}")
        steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        jumps = steps > self.jump_limit
        if jumps.any():
            i = int(np.argmax(jumps))
            raise ValidationError(
                f"position jump of {steps[i]:.4f} m between samples {i} and {i + 1} exceeds {self.jump_limit} m"
            )
        for arr in (pos, rot, srv):
            arr.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "orientations", rot)
        object.__setattr__(self, "servos", srv)
        object.__setattr__(self, "sample_period", period)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def mean_spacing(self) -> float:
        """Mean distance between consecutive positions."""
        return float(np.mean(np.linalg.norm(np.diff(self.positions, axis=0), axis=1)))

    def allclose(self, other: "Demonstration", atol: float = 1e-12) -> bool:
        return (
            len(self) == len(other)
            and abs(self.sample_period - other.sample_period) <= atol
            and np.allclose(self.positions, other.positions, rtol=0, atol=atol)
            and np.allclose(self.orientations, other.orientations, rtol=0, atol=atol)
            and np.allclose(self.servos, other.servos, rtol=0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class TransportedDemonstration(Demonstration):
    """A demonstration carried to new keypoints; jumps may stretch up to 2x."""

    jump_limit: float = 2 * DEFAULT_JUMP_LIMIT


def demonstration_to_dict(demo: Demonstration) -> dict:
    return {
        "sample_period": demo.sample_period,
        "positions": demo.positions.tolist(),
        "orientations": [matrix_to_quat(R).tolist() for R in demo.orientations],
        "servos": demo.servos.tolist(),
    }


def demonstration_from_dict(data, cls=Demonstration) -> Demonstration:
    if not isinstance(data, dict):
        raise ParseError("demonstration document must be a JSON object")
    unknown = set(data) - DEMO_FIELDS
    if unknown:
        raise ParseError(f"unknown demonstration fields: {sorted(unknown)}")
    missing = DEMO_FIELDS - set(data)
    if missing:
        raise ParseError(f"missing demonstration fields: {sorted(missing)}")
    try:
        period = float(data["sample_period"])
        positions = [_vector(p, 3) for p in data["positions"]]
        quats = [_vector(q, 4) for q in data["orientations"]]
        servos = [_vector(s, 2) for s in data["servos"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed demonstration: {exc}") from None
    if not (len(positions) == len(quats) == len(servos)):
        raise ValidationError(
            f"length mismatch: {len(positions)} positions, {len(quats)} orientations, {len(servos)} servos"
        )
    orientations = []
    for i, q in enumerate(quats):
        try:
            orientations.append(quat_to_matrix(q))
        except ValidationError as exc:
            raise ValidationError(f"{exc} at sample {i}") from None
    return cls(
        positions=np.reshape(positions, (-1, 3)),
        orientations=np.reshape(orientations, (-1, 3, 3)),
        servos=np.reshape(servos, (-1, 2)),
        sample_period=period,
    )


def _vector(value, n: int) -> list:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ValueError(f"expected a list of {n} numbers, got {value!r}")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ValueError(f"expected numbers, got {value!r}")
    return [float(v) for v in value]


def load_demonstration(path, cls=Demonstration) -> Demonstration:
    """Read and validate a demonstration JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return demonstration_from_dict(data, cls=cls)


def save_demonstration(demo: Demonstration, path) -> None:
    Path(path).write_text(json.dumps(demonstration_to_dict(demo), indent=1) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class DemoSpec:
    """Recipe for a synthetic demonstration.

    ``waypoints`` are visited in order; each lands exactly on a sample. When
    ``knot_indices`` is omitted, waypoints are spread over the ``samples``
    by cumulative chord length, each segment counting for at least
    ``DWELL_LENGTH`` meters so that a repeated waypoint becomes a pause.
    ``servo_schedule`` is a list of ``(start_index, (bend, twist))`` steps;
    the servo holds each value from its start index until the next step.
    """

    waypoints: np.ndarray
    samples: int
    orientations: np.ndarray | None = None
    servo_schedule: Sequence = ((0, (0.0, 0.0)),)
    sample_period: float = 0.01
    knot_indices: Sequence[int] | None = None

    def resolved_knots(self) -> np.ndarray:
        wp = np.asarray(self.waypoints, dtype=float)
        if self.knot_indices is not None:
            return np.asarray(self.knot_indices, dtype=int)
        # repeated waypoints (dwells) still get samples
        seg = np.maximum(np.linalg.norm(np.diff(wp, axis=0), axis=1), DWELL_LENGTH)
        frac = np.r_[0.0, np.cumsum(seg)] / np.sum(seg)
        return np.rint(frac * (self.samples - 1)).astype(int)


def synthesize_demonstration(spec: DemoSpec) -> Demonstration:
    """Build a smooth demonstration through the DemoSpec waypoints.

    Positions use a shape-preserving piecewise cubic over sample index, so
    the trajectory never overshoots between waypoints. Orientations are
    slerped between waypoint orientations, and servos follow the step
    schedule exactly.
    """
    wp = np.asarray(spec.waypoints, dtype=float)
    if wp.ndim != 2 or wp.shape[1] != 3 or len(wp) < 2:
        raise InvalidScenario("a demonstration spec needs at least 2 waypoints of 3 coordinates")
    if not np.all(np.isfinite(wp)):
        raise InvalidScenario("waypoints must be finite")
    m = int(spec.samples)
    if m < len(wp):
        raise InvalidScenario(f"{m} samples cannot hold {len(wp)} waypoints")
    knots = spec.resolved_knots()
    if len(knots) != len(wp) or knots[0] != 0 or knots[-1] != m - 1 or np.any(np.diff(knots) <= 0):
        raise InvalidScenario(f"knot indices must increase strictly from 0 to {m - 1}, got {list(knots)}")

    idx = np.arange(m, dtype=float)
    positions = PchipInterpolator(knots, wp, axis=0)(idx)
    positions[knots] = wp

    if spec.orientations is None:
        orientations = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    else:
        key_rots = np.asarray(spec.orientations, dtype=float)
        if key_rots.shape != (len(wp), 3, 3):
            raise InvalidScenario("need one orientation matrix per waypoint")
        slerp = Slerp(knots, _ScipyRotation.from_matrix(key_rots))
        orientations = slerp(idx).as_matrix()

    servos = np.zeros((m, 2))
    schedule = sorted((int(i), tuple(v)) for i, v in spec.servo_schedule)
    if not schedule or schedule[0][0] != 0:
        raise InvalidScenario("servo schedule must start at sample 0")
    for (start, value), nxt in zip(schedule, schedule[1:] + [(m, None)]):
        servos[start : nxt[0]] = value
    return Demonstration(positions, orientations, servos, spec.sample_period)


def demo_spec_from_dict(data: dict) -> DemoSpec:
    try:
        quats = data.get("orientations")
        return DemoSpec(
            waypoints=np.asarray(data["waypoints"], dtype=float),
            samples=int(data["samples"]),
            orientations=None if quats is None else np.array([quat_to_matrix(q) for q in quats]),
            servo_schedule=tuple((int(i), tuple(float(x) for x in v)) for i, v in data.get("servo_schedule", [[0, [0, 0]]])),
            sample_period=float(data.get("sample_period", 0.01)),
            knot_indices=data.get("knot_indices"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"malformed demonstration spec: {exc}") from None


def demo_spec_to_dict(spec: DemoSpec) -> dict:
    out = {
        "waypoints": np.asarray(spec.waypoints, dtype=float).tolist(),
        "samples": int(spec.samples),
        "servo_schedule": [[int(i), [float(x) for x in v]] for i, v in spec.servo_schedule],
        "sample_period": float(spec.sample_period),
    }
    if spec.orientations is not None:
        out["orientations"] = [matrix_to_quat(R).tolist() for R in spec.orientations]
    if spec.knot_indices is not None:
        out["knot_indices"] = [int(k) for k in spec.knot_indices]
    return out
