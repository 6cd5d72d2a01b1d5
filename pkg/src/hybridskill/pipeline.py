"""One-call generalization: projection, deformation fit, transport."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demonstration import Demonstration, TransportedDemonstration
from .projection import ProjectionResult, project_and_shift
from .transport import DEFAULT_REGULARIZATION, DeformationMap, KeypointSet, fit, transport_demonstration


@dataclass(frozen=True, eq=False)
class Generalization:
    demonstration: TransportedDemonstration
    deformation: DeformationMap
    fit_source: KeypointSet
    fit_target: KeypointSet
    projection: ProjectionResult | None

    @property
    def residuals(self) -> np.ndarray:
        return self.deformation.residuals(self.fit_source, self.fit_target)

    @property
    def shifts(self) -> np.ndarray:
        if self.projection is None:
            return np.zeros_like(self.fit_source.points)
        return self.projection.shifts


def generalize(
    demo: Demonstration,
    source: KeypointSet,
    target: KeypointSet,
    regularization: float = DEFAULT_REGULARIZATION,
    projection: bool = True,
) -> Generalization:
    """Carry ``demo`` from the ``source`` keypoints to the ``target`` keypoints.

    With ``projection`` on, keypoints are first snapped onto the trajectory
    (see :func:`hybridskill.projection.project_and_shift`).
    """
    proj = None
    fit_source, fit_target = source, target
    if projection:
        proj = project_and_shift(demo, source, target)
        fit_source, fit_target = proj.projected_source, proj.shifted_target
    phi = fit(fit_source, fit_target, regularization)
    return Generalization(transport_demonstration(phi, demo), phi, fit_source, fit_target, proj)
