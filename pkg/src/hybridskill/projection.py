"""Anchor keypoints to the demonstrated motion before fitting the deformation.

With a soft end-effector there is no single point that is unambiguously
"at" an object, so a keypoint recorded on the object may sit some distance
away from the demonstrated path. Each source keypoint is snapped to its
nearest trajectory sample and its target is shifted by the same offset, which
keeps every source-to-target displacement intact while making the deformation
act on the trajectory itself.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .demonstration import Demonstration
from .errors import CountMismatch
from .transport import KeypointSet

logger = logging.getLogger(__name__)


class DuplicateKeypointWarning(UserWarning):
    """Two keypoints snapped to the same trajectory sample."""


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    projected_source: KeypointSet
    shifted_target: KeypointSet
    shifts: np.ndarray
    indices: np.ndarray
    duplicates: tuple = ()


def project_sources(demo: Demonstration, source: KeypointSet) -> tuple[KeypointSet, np.ndarray]:
    """Nearest demonstration sample to every source keypoint.

    Ties go to the lowest sample index.
    """
    X = demo.positions
    d = np.linalg.norm(X[None, :, :] - source.points[:, None, :], axis=2)
    indices = np.argmin(d, axis=1)
    return KeypointSet(X[indices], source.label, check_distinct=False), indices


def compute_shifts(source: KeypointSet, projected: KeypointSet) -> np.ndarray:
    if len(source) != len(projected):
        raise CountMismatch(f"{len(source)} source keypoints vs {len(projected)} projected keypoints")
    return projected.points - source.points


def shift_targets(target: KeypointSet, shifts) -> KeypointSet:
    shifts = np.asarray(shifts, dtype=float).reshape(-1, 3)
    if len(target) != len(shifts):
        raise CountMismatch(f"{len(target)} target keypoints vs {len(shifts)} shifts")
    return KeypointSet(target.points + shifts, target.label, check_distinct=False)


def project_and_shift(demo: Demonstration, source: KeypointSet, target: KeypointSet) -> ProjectionResult:
    """Snap sources onto the trajectory and move targets along with them.

    If distinct sources land on the same sample, a
    :class:`DuplicateKeypointWarning` is emitted and the pairs are listed on
    the result; fitting then relies on a positive regularization.
    """
    if len(source) != len(target):
        raise CountMismatch(f"{len(source)} source keypoints vs {len(target)} target keypoints")
    projected, indices = project_sources(demo, source)
    shifts = compute_shifts(source, projected)
    shifted = shift_targets(target, shifts)
    duplicates = tuple(KeypointSet.duplicate_pairs(projected.points))
    if duplicates:
        msg = f"keypoints {duplicates} project onto the same trajectory sample"
        logger.warning(msg)
        warnings.warn(msg, DuplicateKeypointWarning, stacklevel=2)
    return ProjectionResult(projected, shifted, shifts, indices, duplicates)
