"""Tabletop scenario library and the end-to-end evaluation harness.

Three task archetypes are provided: stacking cups, reaching an object
through a narrow opening, and grasping a hollow object by twisting inside
it. All numbers are harness parameters in meters and radians.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .demonstration import DemoSpec, demo_spec_from_dict, demo_spec_to_dict, synthesize_demonstration
from .errors import DidNotConverge, InvalidScenario, SkillError, UnknownScenario
from .geometry import rot_z
from .pipeline import generalize
from .projection import DuplicateKeypointWarning
from .simulation import run_rollout
from .transport import KeypointSet

SCENARIO_FIELDS = frozenset({"name", "description", "demonstration", "source", "targets", "variant_names"})

# tool pointing straight down
TOOL_DOWN = np.diag([1.0, -1.0, -1.0])
OPEN = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    spec: DemoSpec
    source: np.ndarray
    targets: tuple
    variant_names: tuple = ()
    description: str = ""

    def __post_init__(self):
        src = np.asarray(self.source, dtype=float).reshape(-1, 3)
        targets = tuple(np.asarray(t, dtype=float).reshape(-1, 3) for t in self.targets)
        if not targets:
            raise InvalidScenario(f"{self.name}: no target variants")
        for k, t in enumerate(targets):
            if t.shape != src.shape:
                raise InvalidScenario(f"{self.name}: variant {k} has {len(t)} keypoints, source has {len(src)}")
        if not (np.all(np.isfinite(src)) and all(np.all(np.isfinite(t)) for t in targets)):
            raise InvalidScenario(f"{self.name}: keypoints must be finite")
        names = tuple(self.variant_names) or tuple(f"variant{k}" for k in range(len(targets)))
        if len(names) != len(targets):
            raise InvalidScenario(f"{self.name}: {len(names)} variant names for {len(targets)} variants")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "variant_names", names)

    def demonstration(self):
        return synthesize_demonstration(self.spec)

    def keypoints(self, variant: int) -> tuple[KeypointSet, KeypointSet]:
        if not 0 <= variant < len(self.targets):
            raise InvalidScenario(f"{self.name} has no variant {variant}")
        return KeypointSet(self.source, "source"), KeypointSet(self.targets[variant], "target")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "demonstration": demo_spec_to_dict(self.spec),
            "source": self.source.tolist(),
            "targets": [t.tolist() for t in self.targets],
            "variant_names": list(self.variant_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise InvalidScenario("scenario document must be a JSON object")
        unknown = set(data) - SCENARIO_FIELDS
        if unknown:
            raise InvalidScenario(f"unknown scenario fields: {sorted(unknown)}")
        try:
            return cls(
                name=str(data["name"]),
                spec=demo_spec_from_dict(data["demonstration"]),
                source=data["source"],
                targets=tuple(data["targets"]),
                variant_names=tuple(data.get("variant_names", ())),
                description=str(data.get("description", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScenario(f"malformed scenario: {exc}") from None


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidScenario(f"cannot load scenario {path}: {exc}") from None
    return Scenario.from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=1) + "\n", encoding="utf-8")


def _build_spec(waypoints, servo_events, samples, yaws=None) -> DemoSpec:
    """Waypoint list plus ``{waypoint_index: servo}`` events -> DemoSpec."""
    wp = np.asarray(waypoints, dtype=float)
    probe = DemoSpec(wp, samples)
    knots = probe.resolved_knots()
    schedule = [(0, OPEN)] + [(int(knots[i]), tuple(v)) for i, v in sorted(servo_events.items())]
    orientations = None
    if yaws is not None:
        orientations = np.array([rot_z(a) @ TOOL_DOWN for a in yaws])
    return DemoSpec(wp, samples, orientations, tuple(schedule), 0.01, tuple(int(k) for k in knots))


def stacking() -> Scenario:
    medium, small, large = (0.45, 0.12, 0.08), (0.58, -0.10, 0.10), (0.34, -0.06, 0.09)
    m, s, l = (np.array(p) for p in (medium, small, large))
    up = np.array([0.0, 0.0, 0.12])
    on_top = np.array([0.0, 0.0, 0.07])
    waypoints = [
        (0.45, 0.0, 0.32),
        m + up, m, m, m + up,
        s + up, s, s, s + up,
        l + up, l, l, l + up,
        s + on_top + up, s + on_top, s + on_top, s + on_top + up,
    ]
    closed = (2.5, 0.0)
    events = {2: closed, 7: OPEN, 11: closed, 15: OPEN}
    yaws = [0.0, 0.2, 0.2, 0.2, 0.2, -0.3, -0.3, -0.3, -0.3, 0.4, 0.4, 0.4, 0.4, -0.3, -0.3, -0.3, -0.3]
    spec = _build_spec(waypoints, events, 420, yaws)
    src = np.array([medium, small, large])
    moved_one = src.copy()
    moved_one[0] += (0.0, 0.1, 0.0)
    non_rigid = src.copy()
    non_rigid[0] += (0.06, 0.05, 0.0)
    non_rigid[2] += (-0.04, -0.07, 0.01)
    return Scenario(
        "stacking", spec, src, (src.copy(), moved_one, non_rigid),
        ("identity", "medium_moved", "non_rigid"),
        "pick the medium cup onto the small one, then the large cup onto the medium one",
    )


def narrow_opening() -> Scenario:
    post_a, post_b, obj = (0.50, 0.045, 0.10), (0.50, -0.045, 0.10), (0.64, 0.0, 0.07)
    o = np.array(obj)
    waypoints = [
        (0.34, 0.0, 0.25),
        (0.42, -0.03, 0.11),
        (0.58, 0.02, 0.09),
        o, o,
        (0.58, 0.02, 0.09),
        (0.42, -0.03, 0.11),
        (0.34, 0.0, 0.25),
    ]
    events = {3: (3.0, 0.0)}
    spec = _build_spec(waypoints, events, 300, [0.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0])
    src = np.array([post_a, post_b, obj])
    moved = src.copy()
    moved[2] += (0.02, 0.04, 0.0)
    widened = src.copy()
    widened[0] += (0.01, 0.015, 0.0)
    widened[1] += (0.01, -0.015, 0.0)
    widened[2] += (0.04, -0.03, 0.0)
    return Scenario(
        "narrow_opening", spec, src, (src.copy(), moved, widened),
        ("identity", "object_moved", "opening_widened"),
        "slip the arm between two posts to reach an object behind them",
    )


def hollow_grasp() -> Scenario:
    rim = np.array([0.50, 0.0, 0.12])
    inside = rim - (0.0, 0.0, 0.06)
    waypoints = [
        (0.40, 0.10, 0.32),
        rim + (0.0, 0.0, 0.12),
        rim, inside, inside, rim,
        rim + (0.0, 0.0, 0.16),
        (0.32, 0.20, 0.26),
        (0.32, 0.20, 0.26),
    ]
    events = {3: (0.0, 4.5), 7: OPEN}
    spec = _build_spec(waypoints, events, 260, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.6, 0.6])
    src = rim.reshape(1, 3)
    return Scenario(
        "hollow_grasp", spec, src, (src.copy(), src + (-0.08, 0.06, 0.0)),
        ("identity", "object_moved"),
        "enter a hollow object and twist the arm so it tightens against the walls",
    )


_BUILTINS = {"stacking": stacking, "narrow_opening": narrow_opening, "hollow_grasp": hollow_grasp}


def builtin_scenarios() -> list[Scenario]:
    return [make() for make in _BUILTINS.values()]


def scenario_names() -> list[str]:
    return list(_BUILTINS)


def get_scenario(name_or_path) -> Scenario:
    """Builtin scenario by name, or a scenario JSON file."""
    if name_or_path in _BUILTINS:
        return _BUILTINS[name_or_path]()
    path = Path(str(name_or_path))
    if path.suffix == ".json" and path.exists():
        return load_scenario(path)
    raise UnknownScenario(f"unknown scenario {name_or_path!r}; available: {', '.join(_BUILTINS)}")


@dataclass
class ScenarioReport:
    scenario: str
    variant: int
    variant_name: str
    ok: bool = False
    error: str | None = None
    warnings: list = field(default_factory=list)
    max_residual: float = float("nan")
    shifts: list = field(default_factory=list)
    projection_indices: list = field(default_factory=list)
    min_dist_original: list = field(default_factory=list)
    min_dist_transported: list = field(default_factory=list)
    max_rotation_error: float = float("nan")
    identity_deviation: float | None = None
    rollout_done: bool = False
    rollout_steps: int = 0
    final_error: float = float("nan")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def evaluate_scenario(scenario: Scenario, variant: int = 0, config: RunConfig | None = None) -> ScenarioReport:
    """Run projection, fit, transport and rollout for one target variant.

    Pipeline errors are caught and stored on the report as
    ``"ErrorType: message"`` with ``ok = False``.
    """
    config = config or RunConfig()
    report = ScenarioReport(scenario.name, variant, scenario.variant_names[variant]
                            if 0 <= variant < len(scenario.variant_names) else str(variant))
    try:
        demo = scenario.demonstration()
        source, target = scenario.keypoints(variant)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DuplicateKeypointWarning)
            gen = generalize(demo, source, target, config.regularization, config.projection)
        report.warnings = [f"{w.category.__name__}: {w.message}" for w in caught
                           if issubclass(w.category, DuplicateKeypointWarning)]
        moved = gen.demonstration
        report.max_residual = float(np.max(gen.residuals))
        report.shifts = gen.shifts.tolist()
        if gen.projection is not None:
            report.projection_indices = gen.projection.indices.tolist()
        report.min_dist_original = _min_distances(demo.positions, target.points)
        report.min_dist_transported = _min_distances(moved.positions, target.points)
        RtR = np.einsum("mji,mjk->mik", moved.orientations, moved.orientations)
        report.max_rotation_error = float(max(np.max(np.abs(RtR - np.eye(3))),
                                              np.max(np.abs(np.linalg.det(moved.orientations) - 1.0))))
        if np.array_equal(source.points, target.points):
            report.identity_deviation = float(max(
                np.max(np.abs(moved.positions - demo.positions)),
                np.max(np.abs(moved.orientations - demo.orientations)),
                np.max(np.abs(moved.servos - demo.servos)),
            ))
        try:
            trace = run_rollout(
                moved, time_weight=config.time_weight, window=config.window, alpha=config.alpha,
                servo_step=config.servo_step, max_steps=config.max_steps, track_tol=config.track_tol,
                render=False,
            )
        except DidNotConverge as exc:
            report.rollout_steps = len(exc.trace)
            report.final_error = exc.trace.final_error
            raise
        report.rollout_done = trace.done
        report.rollout_steps = len(trace)
        report.final_error = trace.final_error
        report.ok = report.max_residual <= max(config.residual_tol, 10 * config.regularization *
                                                float(np.max(np.linalg.norm(gen.deformation.weights, axis=1), initial=0.0)))
    except SkillError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        report.ok = False
    return report


def _min_distances(trajectory: np.ndarray, points: np.ndarray) -> list[float]:
    d = np.linalg.norm(trajectory[None, :, :] - points[:, None, :], axis=2)
    return d.min(axis=1).tolist()
