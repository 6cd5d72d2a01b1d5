"""Exception types raised across the package.

Class names double as the error tags printed by the command-line tool, so they
are kept short and stable.
"""


class SkillError(Exception):
    """Base class for every error raised by hybridskill."""


class ParseError(SkillError):
    """A file could not be parsed into the documented format."""


class ValidationError(SkillError):
    """Parsed data violates a data-model invariant."""


class SingularJacobian(SkillError):
    """The deformation Jacobian is (numerically) singular.

    ``index`` carries the demonstration sample where it happened, if known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CountMismatch(SkillError):
    """Two keypoint sets (or shift lists) differ in length."""


class DegenerateSystem(SkillError):
    """The kernel system of the deformation fit is too ill-conditioned."""


class InvalidScenario(SkillError):
    """A scenario or demonstration spec cannot be synthesized."""


class UnknownScenario(SkillError):
    """No builtin scenario has the requested name."""


class DidNotConverge(SkillError):
    """A rollout hit ``max_steps`` before finishing.

    The partial trace is kept on ``trace`` for inspection.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(SkillError):
    """A run configuration has unknown keys or out-of-range values."""
