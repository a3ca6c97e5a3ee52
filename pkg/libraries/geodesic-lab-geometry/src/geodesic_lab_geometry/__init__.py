"""geodesic-lab-geometry: surfaces, bumps and the geodesic flow."""

from .states import (
    TWO_PI,
    HALF_PI,
    wrap_angle,
    wrap_positive,
    GeodesicState,
    JacobiState,
    RiccatiState,
    flip,
)

from .bump import (
    BumpAnchor,
    PerturbationBump,
    MetricCoefficients,
    ChristoffelSymbols,
    bump_metric,
    bump_christoffel,
    bump_curvature_on_axis,
    brioschi_curvature_fd,
)

from .surface import (
    POLE_RADIUS,
    ProfileSurface,
    RegionParams,
    CapParams,
    DumbbellLandmarks,
    InvariantOutcome,
    build_round_sphere,
    build_dumbbell,
    profile_eval,
    gaussian_curvature,
    clairaut,
)

from .flow import (
    FlowTolerance,
    CrossingEvent,
    StopCondition,
    Trajectory,
    JacobiSeries,
    RiccatiSeries,
    integrate_geodesic,
    integrate_jacobi,
    integrate_riccati,
    wronskian,
    shoot,
)

from .lyapunov import (
    LyapunovBoundParams,
    finite_time_exponent,
    measure_curvature_bound,
    threshold_length,
    hyperbolic_rate,
)

from .config import BumpSettings, SurfaceConfig

__all__ = [
    "TWO_PI",
    "HALF_PI",
    "wrap_angle",
    "wrap_positive",
    "GeodesicState",
    "JacobiState",
    "RiccatiState",
    "flip",
    "BumpAnchor",
    "PerturbationBump",
    "MetricCoefficients",
    "ChristoffelSymbols",
    "bump_metric",
    "bump_christoffel",
    "bump_curvature_on_axis",
    "brioschi_curvature_fd",
    "POLE_RADIUS",
    "ProfileSurface",
    "RegionParams",
    "CapParams",
    "DumbbellLandmarks",
    "InvariantOutcome",
    "build_round_sphere",
    "build_dumbbell",
    "profile_eval",
    "gaussian_curvature",
    "clairaut",
    "FlowTolerance",
    "CrossingEvent",
    "StopCondition",
    "Trajectory",
    "JacobiSeries",
    "RiccatiSeries",
    "integrate_geodesic",
    "integrate_jacobi",
    "integrate_riccati",
    "wronskian",
    "shoot",
    "LyapunovBoundParams",
    "finite_time_exponent",
    "measure_curvature_bound",
    "threshold_length",
    "hyperbolic_rate",
    "BumpSettings",
    "SurfaceConfig",
]
