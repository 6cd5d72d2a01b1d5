import numpy as np
import pytest

from hybridskill.demonstration import DemoSpec, synthesize_demonstration
from hybridskill.geometry import rot_z

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def straight_demo(m=101, start=(0.0, 0.0, 0.0), end=(1.0, 0.0, 0.0)):
    """Uniform straight line; big steps allowed through a loose jump limit."""
    from hybridskill.demonstration import Demonstration

    t = np.linspace(0.0, 1.0, m)[:, None]
    pos = (1 - t) * np.asarray(start) + t * np.asarray(end)
    rot = np.broadcast_to(np.eye(3), (m, 3, 3))
    return Demonstration(pos, rot, np.zeros((m, 2)), 0.01, jump_limit=1.0)


@pytest.fixture
def curvy_demo():
    """Smooth 3-D demo with varying orientation through four waypoints."""
    wp = np.array([[0.3, -0.1, 0.2], [0.45, 0.05, 0.1], [0.55, 0.0, 0.25], [0.4, 0.15, 0.15]])
    rots = np.array([rot_z(a) @ np.diag([1.0, -1.0, -1.0]) for a in (0.0, 0.4, -0.3, 0.8)])
    spec = DemoSpec(wp, 300, rots, ((0, (0.0, 0.0)), (120, (1.5, 0.0)), (200, (1.5, 2.0))))
    return synthesize_demonstration(spec)
