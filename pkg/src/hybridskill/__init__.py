"""One-shot skill generalization for hybrid rigid/soft robots.

A single demonstration (poses plus cable-servo positions) is carried to new
object locations by a keypoint-fitted space deformation, with keypoints first
snapped onto the demonstrated path, and replayed by a reactive attractor
policy in a kinematic simulator.
"""

from .demonstration import (
    DemoSpec,
    Demonstration,
    TransportedDemonstration,
    load_demonstration,
    save_demonstration,
    synthesize_demonstration,
)
from .errors import (
    CountMismatch,
    DegenerateSystem,
    DidNotConverge,
    InvalidScenario,
    ParseError,
    SingularJacobian,
    SkillError,
    UnknownScenario,
    ValidationError,
)
from .geometry import Pose, numerical_jacobian, polar_rotation
from .pipeline import generalize
from .policy import AttractorCommand, AttractorPolicy, servo_step_quantize
from .projection import ProjectionResult, compute_shifts, project_and_shift, project_sources, shift_targets
from .scenarios import Scenario, builtin_scenarios, evaluate_scenario, get_scenario
from .simulation import FollowerState, SimTrace, SoftArmShape, run_rollout, soft_arm_shape, step_follower
from .transport import (
    DeformationMap,
    KeypointSet,
    fit,
    load_keypoints,
    save_keypoints,
    transport_demonstration,
    transport_orientations,
    transport_positions,
)

__version__ = "0.1.0"
