"""Reactive attractor replay over a (transported) demonstration.

At every call the policy looks at a forward window of labels, picks the one
closest to the robot in a combined position and time metric, and commands
the label right after it. The time term measures how far a label is from
the label the robot was last sent toward, in units of the demonstration's
mean sample spacing, so ``time_weight`` is dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demonstration import Demonstration
from .geometry import Pose

DEFAULT_TIME_WEIGHT = 1.0
DEFAULT_WINDOW = 20
DEFAULT_SERVO_STEP = 0.05


@dataclass(frozen=True)
class AttractorCommand:
    pose: Pose
    servo_target: np.ndarray
    index: int
    done: bool


class AttractorPolicy:
    """Stateful replay policy for one rollout.

    ``current_index`` is the last selected (closest) label and never moves
    backward. ``commanded_index`` is the label last sent as attractor, i.e.
    where the robot is expected to be in time; both start at 0.
    """

    def __init__(
        self,
        demonstration: Demonstration,
        time_weight: float = DEFAULT_TIME_WEIGHT,
        window: int = DEFAULT_WINDOW,
        current_index: int = 0,
    ):
        if time_weight < 0:
            raise ValueError("time_weight must be >= 0")
        if window < 1:
            raise ValueError("window must be >= 1")
        m = len(demonstration)
        if not 0 <= current_index < m:
            raise ValueError(f"current_index {current_index} outside [0, {m - 1}]")
        self.demonstration = demonstration
        self.time_weight = float(time_weight)
        self.window = int(window)
        self.current_index = int(current_index)
        self.commanded_index = int(current_index)
        self._spacing = demonstration.mean_spacing

    def metric(self, robot_position) -> tuple[np.ndarray, np.ndarray]:
        """Candidate label indices and their combined cost."""
        last = len(self.demonstration) - 1
        idx = np.arange(self.current_index, min(self.current_index + self.window, last) + 1)
        dist = np.linalg.norm(self.demonstration.positions[idx] - np.asarray(robot_position, dtype=float), axis=1)
        if self.time_weight == 0:
            return idx, dist
        if np.isinf(self.time_weight):
            # the limit of an infinite time weight: only the expected label counts
            return idx, np.where(idx == self.commanded_index, 0.0, np.inf)
        lag = np.abs(idx - self.commanded_index)
        return idx, dist + self.time_weight * lag * self._spacing

    def select_attractor(self, robot_position) -> AttractorCommand:
        idx, cost = self.metric(robot_position)
        best = int(idx[np.argmin(cost)])  # argmin keeps the lowest index on ties
        last = len(self.demonstration) - 1
        target = min(best + 1, last)
        self.current_index = best
        self.commanded_index = target
        demo = self.demonstration
        return AttractorCommand(
            pose=Pose(demo.positions[target], demo.orientations[target]),
            servo_target=np.array(demo.servos[target]),
            index=target,
            done=best == last,
        )


def servo_step_quantize(current, target, step: float = DEFAULT_SERVO_STEP) -> np.ndarray:
    """Move each servo channel toward its target by at most one button step."""
    if not step > 0:
        raise ValueError("servo step must be positive")
    current = np.asarray(current, dtype=float)
    delta = np.clip(np.asarray(target, dtype=float) - current, -step, step)
    return np.maximum(current + delta, 0.0)
