"""Kinematic replay of a demonstration plus a render model of the soft arm.

The robot is modelled as a first-order follower: each step it closes a fixed
fraction ``alpha`` of the gap to the commanded attractor, both in position and
along the rotation geodesic, while the cable servos move in discrete button
steps. The soft arm is drawn as a constant-curvature, constant-torsion rod
hanging from the tool frame; it is output only and never feeds back into
the policy.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demonstration import Demonstration
from .errors import DidNotConverge
from .geometry import Pose, geodesic_step, matrix_to_quat
from .policy import (
    DEFAULT_SERVO_STEP,
    DEFAULT_TIME_WEIGHT,
    DEFAULT_WINDOW,
    AttractorCommand,
    AttractorPolicy,
    servo_step_quantize,
)

ARM_LENGTH = 0.380
BASE_RADIUS = 0.035 / 2
TIP_RADIUS = 0.007 / 2
ARM_SAMPLES = 50
MAX_CABLE_PULL = 2 * math.pi
# a full bend-cable pull curls the arm through 1.5 turns
BEND_GAIN = 1.5 * 2 * math.pi / (ARM_LENGTH * MAX_CABLE_PULL)
# rad of end-to-end twist per rad of twist-cable pull
TWIST_GAIN = 0.5

DEFAULT_ALPHA = 0.3
DEFAULT_TRACK_TOL = 1e-3
DEFAULT_MAX_STEPS = 20000

CSV_COLUMNS = ("step", "x", "y", "z", "qw", "qx", "qy", "qz", "l0", "l1", "attractor_index")


@dataclass(frozen=True)
class FollowerState:
    pose: Pose
    servo: np.ndarray
    step_count: int = 0


def step_follower(
    state: FollowerState, cmd: AttractorCommand, alpha: float = DEFAULT_ALPHA, servo_step: float = DEFAULT_SERVO_STEP
) -> FollowerState:
    """Advance the follower one step toward ``cmd``.

    ``alpha = 1`` lands exactly on the attractor pose.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    p = state.pose.position
    if alpha == 1:
        position = np.array(cmd.pose.position)
    else:
        position = p + alpha * (cmd.pose.position - p)
    orientation = geodesic_step(state.pose.orientation, cmd.pose.orientation, alpha)
    servo = servo_step_quantize(state.servo, cmd.servo_target, servo_step)
    return FollowerState(Pose(position, orientation), servo, state.step_count + 1)


@dataclass(frozen=True, eq=False)
class SoftArmShape:
    """Sampled centerline (tool frame, meters) and tapered radii."""

    centerline: np.ndarray
    radii: np.ndarray
    arc_params: np.ndarray

    @property
    def length(self) -> float:
        return float(self.arc_params[-1] - self.arc_params[0])


def _curvature_torsion(servo) -> tuple[float, float]:
    bend, twist = (float(v) for v in servo)
    if bend < 0 or twist < 0:
        raise ValueError("servo positions must be non-negative")
    return BEND_GAIN * bend, TWIST_GAIN * twist / ARM_LENGTH


def centerline_points(servo, s) -> np.ndarray:
    """Centerline at arc-length parameters ``s`` (meters from the base).

    The base sits at the tool origin with the arm along +z; the bend cable
    curls it toward +x. With a body angular rate ``(0, kappa, tau)`` per meter
    the points follow the closed-form SE(3) exponential.
    """
    kappa, tau = _curvature_torsion(servo)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    omega = np.array([0.0, kappa, tau])
    rate = np.linalg.norm(omega)
    tangent = np.array([0.0, 0.0, 1.0])
    if rate == 0:
        return s[:, None] * tangent
    axis = omega / rate
    W = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    Wv, WWv = W @ tangent, W @ (W @ tangent)
    theta = rate * s
    c1 = (1 - np.cos(theta)) / rate
    c2 = (theta - np.sin(theta)) / rate
    return s[:, None] * tangent + c1[:, None] * Wv + c2[:, None] * WWv


def soft_arm_shape(servo, samples: int = ARM_SAMPLES) -> SoftArmShape:
    s = np.linspace(0.0, ARM_LENGTH, samples)
    radii = BASE_RADIUS + (TIP_RADIUS - BASE_RADIUS) * s / ARM_LENGTH
    return SoftArmShape(centerline_points(servo, s), radii, s)


@dataclass
class SimTrace:
    """Per-step rollout record.

    ``steps`` holds dicts with the follower pose, servo state, attractor index
    and the arm centerline in world coordinates.
    """

    metadata: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    done: bool = False
    final_error: float = float("nan")

    def __len__(self) -> int:
        return len(self.steps)

    def record(self, state: FollowerState, attractor_index: int, render: bool = True) -> None:
        entry = {
            "step": state.step_count,
            "position": state.pose.position.tolist(),
            "orientation": matrix_to_quat(state.pose.orientation).tolist(),
            "servo": state.servo.tolist(),
            "attractor_index": int(attractor_index),
        }
        if render:
            shape = soft_arm_shape(state.servo)
            world = shape.centerline @ state.pose.orientation.T + state.pose.position
            entry["arm_centerline"] = world.tolist()
        self.steps.append(entry)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s["position"] for s in self.steps]).reshape(-1, 3)

    @property
    def attractor_indices(self) -> np.ndarray:
        return np.array([s["attractor_index"] for s in self.steps], dtype=int)

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "done": self.done,
            "final_error": self.final_error,
            "arm_radii": soft_arm_shape((0.0, 0.0)).radii.tolist(),
            "steps": self.steps,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for s in self.steps:
                writer.writerow(
                    [s["step"], *map(repr, s["position"]), *map(repr, s["orientation"]),
                     *map(repr, s["servo"]), s["attractor_index"]]
                )


def run_rollout(
    demo: Demonstration,
    *,
    time_weight: float = DEFAULT_TIME_WEIGHT,
    window: int = DEFAULT_WINDOW,
    alpha: float = DEFAULT_ALPHA,
    servo_step: float = DEFAULT_SERVO_STEP,
    max_steps: int = DEFAULT_MAX_STEPS,
    track_tol: float = DEFAULT_TRACK_TOL,
    start: FollowerState | None = None,
    render: bool = True,
    metadata: dict | None = None,
) -> SimTrace:
    """Replay ``demo`` with the attractor policy driving a kinematic follower.

    The rollout ends once the policy reports the last label as closest and the
    follower is within ``track_tol`` of the final demonstrated position. By
    default the follower starts on the first label.

    Raises
    ------
    DidNotConverge
        After ``max_steps`` follower steps without finishing; the partial
        trace is attached to the exception.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    policy = AttractorPolicy(demo, time_weight=time_weight, window=window)
    if start is None:
        start = FollowerState(Pose(demo.positions[0], demo.orientations[0]), np.array(demo.servos[0]))
    meta = {
        "samples": len(demo),
        "alpha": alpha,
        "time_weight": time_weight,
        "window": window,
        "servo_step": servo_step,
        "max_steps": max_steps,
        "track_tol": track_tol,
    }
    meta.update(metadata or {})
    trace = SimTrace(metadata=meta)
    goal = demo.positions[-1]
    state = start
    while True:
        cmd = policy.select_attractor(state.pose.position)
        error = float(np.linalg.norm(state.pose.position - goal))
        if cmd.done and error <= track_tol:
            trace.done = True
            trace.final_error = error
            return trace
        if state.step_count - start.step_count >= max_steps:
            trace.final_error = error
            raise DidNotConverge(
                f"rollout stopped after {max_steps} steps at label {policy.current_index}/{len(demo) - 1}, "
                f"{error:.4g} m from the goal",
                trace=trace,
            )
        state = step_follower(state, cmd, alpha, servo_step)
        trace.record(state, cmd.index, render)
