"""Run configuration shared by the scenario harness and the command line."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .policy import DEFAULT_SERVO_STEP, DEFAULT_TIME_WEIGHT, DEFAULT_WINDOW
from .simulation import DEFAULT_ALPHA, DEFAULT_MAX_STEPS, DEFAULT_TRACK_TOL
from .transport import DEFAULT_REGULARIZATION


@dataclass(frozen=True)
class RunConfig:
    regularization: float = DEFAULT_REGULARIZATION
    time_weight: float = DEFAULT_TIME_WEIGHT
    window: int = DEFAULT_WINDOW
    alpha: float = DEFAULT_ALPHA
    servo_step: float = DEFAULT_SERVO_STEP
    max_steps: int = DEFAULT_MAX_STEPS
    track_tol: float = DEFAULT_TRACK_TOL
    residual_tol: float = 1e-9
    projection: bool = True
    seed: int = 0

    def __post_init__(self):
        checks = {
            "regularization": self.regularization >= 0,
            "time_weight": self.time_weight >= 0,
            "window": isinstance(self.window, int) and self.window >= 1,
            "alpha": 0 < self.alpha <= 1,
            "servo_step": self.servo_step > 0,
            "max_steps": isinstance(self.max_steps, int) and self.max_steps >= 1,
            "track_tol": self.track_tol > 0,
            "residual_tol": self.residual_tol > 0,
            "projection": isinstance(self.projection, bool),
            "seed": isinstance(self.seed, int),
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if isinstance(value, float) and math.isnan(value):
                ok = False
            if not ok:
                raise ConfigError(f"invalid value for {name}: {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **overrides) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data
