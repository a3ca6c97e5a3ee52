"""geodesic-lab-dynamics: segment counting, section maps and separatrix splitting."""

from .counting import (
    LENGTH_TIE,
    CONJUGATE_JACOBI,
    SurfacePoint,
    RayFan,
    shoot_fan,
    uniform_directions,
    great_circle_distance,
    great_circle_lengths,
    transversal_offsets,
    Segment,
    CountResult,
    count_segments,
    IntegralEstimate,
    integral_count,
    integral_count_series,
    front_length_integral,
    VolumeBound,
    volume_bound,
    FrontBound,
    front_length_bound,
    FrontSeries,
    front_series,
    FrontSample,
    FrontCurve,
    FrontLength,
    front_length,
    GrowthSeries,
    GrowthFit,
    growth_rate,
    MonteCarloEstimate,
    sample_area_points,
    double_integral_count,
    monte_carlo_count,
)

from .sections import (
    SECTIONS,
    SectionPoint,
    separatrix_phi,
    psi_cylinder,
    TransitFunction,
    chebyshev_nodes,
    turn_advance,
    tabulate_transit,
    psi_turn,
    Transit,
    numeric_transit,
    numeric_section_map,
    SurrogateTurn,
    ReturnMap,
    compose_return,
    area_jacobian,
    scaled_map,
    limit_map,
    scaling_distance,
    OrbitRecord,
    CircleWitness,
    iterate_orbit,
    detect_invariant_circle,
    classify_side,
    measure_phi0,
    SojournEstimate,
    measure_sojourn,
    measure_d0,
)

from .homoclinic import (
    DEFAULT_SEED_DISTANCE,
    CLAIRAUT_DRIFT,
    separatrix_direction,
    anchor_state,
    place_bump,
    SeparatrixTrace,
    trace_separatrix,
    separatrix_deviation,
    SplittingResult,
    splitting_gap,
    splitting_sweep,
    linear_response_spread,
)

__all__ = [
    "LENGTH_TIE",
    "CONJUGATE_JACOBI",
    "SurfacePoint",
    "RayFan",
    "shoot_fan",
    "uniform_directions",
    "great_circle_distance",
    "great_circle_lengths",
    "transversal_offsets",
    "Segment",
    "CountResult",
    "count_segments",
    "IntegralEstimate",
    "integral_count",
    "integral_count_series",
    "front_length_integral",
    "VolumeBound",
    "volume_bound",
    "FrontBound",
    "front_length_bound",
    "FrontSeries",
    "front_series",
    "FrontSample",
    "FrontCurve",
    "FrontLength",
    "front_length",
    "GrowthSeries",
    "GrowthFit",
    "growth_rate",
    "MonteCarloEstimate",
    "sample_area_points",
    "double_integral_count",
    "monte_carlo_count",
    "SECTIONS",
    "SectionPoint",
    "separatrix_phi",
    "psi_cylinder",
    "TransitFunction",
    "chebyshev_nodes",
    "turn_advance",
    "tabulate_transit",
    "psi_turn",
    "Transit",
    "numeric_transit",
    "numeric_section_map",
    "SurrogateTurn",
    "ReturnMap",
    "compose_return",
    "area_jacobian",
    "scaled_map",
    "limit_map",
    "scaling_distance",
    "OrbitRecord",
    "CircleWitness",
    "iterate_orbit",
    "detect_invariant_circle",
    "classify_side",
    "measure_phi0",
    "SojournEstimate",
    "measure_sojourn",
    "measure_d0",
    "DEFAULT_SEED_DISTANCE",
    "CLAIRAUT_DRIFT",
    "separatrix_direction",
    "anchor_state",
    "place_bump",
    "SeparatrixTrace",
    "trace_separatrix",
    "separatrix_deviation",
    "SplittingResult",
    "splitting_gap",
    "splitting_sweep",
    "linear_response_spread",
]
