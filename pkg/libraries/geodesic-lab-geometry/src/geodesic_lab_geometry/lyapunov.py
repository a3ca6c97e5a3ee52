"""Finite-time expansion rates from the eps-weighted Jacobi functional.

For a Jacobi field Y along a geodesic, y_eps = eps^2 <Y, Y> + <Y', Y'>. Its
logarithmic growth over [0, T] bounds the expansion of the flow in the
direction transversal to the orbit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from geodesic_lab_core.decorators import observed
from geodesic_lab_geometry.flow import FlowTolerance, integrate_geodesic
from geodesic_lab_geometry.states import GeodesicState
from geodesic_lab_geometry.surface import ProfileSurface

logger = logging.getLogger(__name__)

CURVATURE_MARGIN = 1.01


@dataclass(frozen=True)
class LyapunovBoundParams:
    """Inputs of the exponent bound L^2 t0 / (d eps) + eps / 2."""

    epsilon: float
    curvature_bound: float
    sojourn_time: float
    cylinder_length: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.curvature_bound > 1.0:
            raise ValueError(f"curvature bound must exceed 1, got {self.curvature_bound}")
        if self.sojourn_time < 0.0 or self.cylinder_length <= 0.0:
            raise ValueError("sojourn time must be >= 0 and cylinder length > 0")

    @property
    def bound(self) -> float:
        L2 = self.curvature_bound ** 2
        return L2 * self.sojourn_time / (self.cylinder_length * self.epsilon) + 0.5 * self.epsilon

    @property
    def threshold(self) -> float:
        """Cylinder length beyond which the bound drops below eps."""
        return threshold_length(self.epsilon, self.curvature_bound, self.sojourn_time)

    @property
    def above_threshold(self) -> bool:
        return self.cylinder_length > self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "L": self.curvature_bound,
            "t0": self.sojourn_time,
            "d": self.cylinder_length,
            "bound": self.bound,
            "threshold": self.threshold,
        }


def threshold_length(epsilon: float, curvature_bound: float, sojourn_time: float) -> float:
    return 2.0 * curvature_bound ** 2 * sojourn_time / (epsilon ** 2)


def measure_curvature_bound(surface: ProfileSurface, n: int = 4001) -> float:
    """L = 1.01 * max(sup |K|, 1) over the surface, bump included."""
    sup = surface.sup_abs_curvature(n)
    if surface.is_perturbed:
        sup = max(sup, surface.bump.sup_abs_curvature())
    return CURVATURE_MARGIN * max(sup, 1.0)


@observed("finite_time_exponent")
def finite_time_exponent(
    surface: ProfileSurface,
    v0: GeodesicState,
    T: float,
    epsilon: float,
    tol: Optional[FlowTolerance] = None,
) -> float:
    """Largest (1/2T) log(y_eps(T) / y_eps(0)) over the Jacobi basis (1, 0) and (0, 1)."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    traj = integrate_geodesic(surface, v0, T, tol, jacobi=[(1.0, 0.0), (0.0, 1.0)], record_levels=False)
    pairs = traj.final_jacobi
    e2 = epsilon * epsilon
    initial = np.array([e2, 1.0])
    final = e2 * pairs[:, 0] ** 2 + pairs[:, 1] ** 2
    rates = np.log(final / initial) / (2.0 * T)
    exponent = float(np.max(rates))
    logger.debug(f"finite_time_exponent T={T} eps={epsilon} -> {exponent:.6g}")
    return exponent


def hyperbolic_rate(surface: ProfileSurface) -> float:
    """sqrt(-K) on the neck latitude of a dumbbell."""
    if surface.landmarks is None:
        raise ValueError("hyperbolic rate is defined for dumbbell surfaces only")
    K = surface.gaussian_curvature(surface.landmarks.l0)
    return math.sqrt(-K) if K < 0.0 else 0.0


__all__ = [
    "CURVATURE_MARGIN",
    "LyapunovBoundParams",
    "threshold_length",
    "measure_curvature_bound",
    "finite_time_exponent",
    "hyperbolic_rate",
]
