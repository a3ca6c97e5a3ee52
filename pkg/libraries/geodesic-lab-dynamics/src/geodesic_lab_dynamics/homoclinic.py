"""Separatrices of the neck geodesic gamma_0 and their splitting by the bump.

The band-side separatrix leaves gamma_0, crosses the flat band outward, runs
through the cylinder and the cap, and comes back across the band to gamma_0.
Its Clairaut value is r0. The bump is anchored on the inbound band passage with
its t-axis along the separatrix, so the separatrix stays a geodesic.

Along the separatrix the stable solution u- of u' = -u^2 - K tends to
-sqrt(-K(l0)) in forward time and the unstable solution u+ tends to
+sqrt(-K(l0)) in backward time. Before the perturbation they coincide; after
it they differ at the exit time t2 of the bump support by the splitting gap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from geodesic_lab_core.decorators import observed
from geodesic_lab_core.exceptions import BumpPlacementError, SeparatrixError
from geodesic_lab_geometry.bump import PerturbationBump
from geodesic_lab_geometry.flow import FlowTolerance, Trajectory, integrate_geodesic
from geodesic_lab_geometry.lyapunov import hyperbolic_rate
from geodesic_lab_geometry.states import GeodesicState, flip
from geodesic_lab_geometry.surface import ProfileSurface

logger = logging.getLogger(__name__)

DEFAULT_SEED_DISTANCE = 1e-4
CLAIRAUT_DRIFT = 1e-8
_NEAR_NECK = 1e-2
_SAMPLE_STEP = 0.01


def separatrix_direction(r0: float, r_local: float) -> float:
    """phi with r_local sin(phi) = r0; the negative root is -phi.

    Raises:
        SeparatrixError: If r_local < r0 or r0 <= 0
    """
    if r0 <= 0.0:
        raise SeparatrixError(f"r0 must be positive, got {r0}")
    if r_local < r0:
        raise SeparatrixError(f"no separatrix direction where r={r_local:.6g} < r0={r0:.6g}",
                              details={"r_local": r_local, "r0": r0})
    return math.asin(min(r0 / r_local, 1.0))


def anchor_state(surface: ProfileSurface, theta: float, l: float) -> GeodesicState:
    """Direction of the inbound band passage of the band-side separatrix at (theta, l)."""
    if surface.landmarks is None:
        raise SeparatrixError("separatrices are defined on dumbbell surfaces only")
    phi = separatrix_direction(surface.landmarks.r0, surface.profile_eval(l))
    return GeodesicState(theta, l, -phi, 0.0, heading=-1)


def _cylinder_cap(surface: ProfileSurface) -> float:
    lm = surface.landmarks
    cos_cyl = math.sqrt(max(1.0 - (lm.r0 / lm.rho) ** 2, 1e-6))
    return 2.0 * lm.d / cos_cyl + 120.0


def _first_below(traj: Trajectory, target: float, after: float, level: float) -> Optional[float]:
    """First time > ``after`` where l - level drops to ``target``, refined on the dense output."""
    ts = np.arange(max(after, traj.start.s), traj.end.s, _SAMPLE_STEP)
    if ts.size < 2:
        return None
    gap = traj.sample(ts).l - level - target
    idx = np.nonzero((gap[:-1] > 0.0) & (gap[1:] <= 0.0))[0]
    if idx.size == 0:
        return None
    k = int(idx[0])
    return brentq(lambda t: float(traj.sample([t]).l[0]) - level - target, float(ts[k]), float(ts[k + 1]),
                  xtol=1e-13)


# ==========================================================================
# Bump placement
# ==========================================================================


def _outbound_clearance(surface: ProfileSurface, bump: PerturbationBump, tol: Optional[FlowTolerance]) -> float:
    """Smallest box indicator over the outbound band passage (positive = outside the box)."""
    base = surface.unperturbed()
    an = bump.anchor
    start = flip(anchor_state(base, an.theta, an.l))
    traj = integrate_geodesic(base, start, _cylinder_cap(base), tol)
    betas = traj.events_of("beta")
    if not betas:
        raise SeparatrixError("separatrix never reached the cap")
    l0 = base.landmarks.l0
    t_end = _first_below(traj, _NEAR_NECK, betas[0].time, l0) or traj.end.s
    ts = np.arange(betas[0].time, t_end, _SAMPLE_STEP)
    smp = traj.sample(ts)
    lo, hi = bump.box_l_extent()
    near = (smp.l > lo - 0.1) & (smp.l < hi + 0.1)
    if not np.any(near):
        return math.inf
    return min(bump.box_indicator(*bump.to_chart(float(t), float(l)))
               for t, l in zip(smp.theta[near], smp.l[near]))


@observed("place_bump")
def place_bump(
    surface: ProfileSurface,
    amplitude: float,
    delta_t: float = 0.2,
    delta_x: float = 0.1,
    box_factor: float = 1.2,
    n_candidates: int = 9,
    tol: Optional[FlowTolerance] = None,
) -> PerturbationBump:
    """Anchor a bump on the inbound separatrix passage, as far as possible from the outbound one.

    Raises:
        BumpPlacementError: If every candidate box meets the outbound passage
    """
    lm = surface.landmarks
    if lm is None:
        raise SeparatrixError("bump placement needs a dumbbell surface")
    probe = PerturbationBump.anchored(0.0, 0.0, lm.l1, anchor_state(surface, 0.0, lm.l1).psi, lm.r1,
                                      delta_t, delta_x, box_factor)
    lo, hi = probe.box_l_extent()
    reach = 0.5 * (hi - lo) + 1e-3
    band_lo, band_hi = lm.band
    if band_hi - band_lo <= 2.0 * reach:
        raise BumpPlacementError(-math.inf, details={"reason": "box wider than the band"})
    best: Tuple[float, Optional[PerturbationBump]] = (-math.inf, None)
    for l_p in np.linspace(band_lo + reach, band_hi - reach, n_candidates):
        psi = anchor_state(surface, 0.0, float(l_p)).psi
        candidate = PerturbationBump.anchored(amplitude, 0.0, float(l_p), psi, lm.r1, delta_t, delta_x, box_factor)
        clearance = _outbound_clearance(surface, candidate, tol)
        logger.debug(f"bump candidate l={l_p:.4f}: clearance {clearance:.4g}")
        if clearance > best[0]:
            best = (clearance, candidate)
    if best[1] is None or best[0] <= 0.0:
        raise BumpPlacementError(best[0])
    logger.info(f"placed bump at l={best[1].anchor.l:.4f} with clearance {best[0]:.4g}")
    return best[1]


# ==========================================================================
# Separatrix trace
# ==========================================================================


@dataclass
class SeparatrixTrace:
    """Unperturbed separatrix through an anchor, traced until it is near gamma_0 at both ends.

    Times are measured from the anchor: the forward branch ends at ``t_plus``,
    the backward branch at ``-t_minus``; [t1, t2] is the bump support.
    """

    anchor: GeodesicState
    clairaut_value: float
    forward: Trajectory
    backward: Trajectory
    t_plus: float
    t_minus: float
    t1: float
    t2: float
    seed_distance: float
    forward_rate: float
    backward_rate: float
    max_drift: float

    def state_at(self, t: float) -> GeodesicState:
        if t >= 0.0:
            return self.forward.state_at(t)
        return flip(self.backward.state_at(-t)).with_time(t)

    @property
    def forward_end(self) -> GeodesicState:
        return self.forward.state_at(self.t_plus)

    @property
    def backward_end(self) -> GeodesicState:
        """State at -t_minus, pointing forward along the separatrix."""
        return self.state_at(-self.t_minus)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "anchor": self.anchor.to_dict(),
            "clairaut": self.clairaut_value,
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "t1": self.t1,
            "t2": self.t2,
            "seed_distance": self.seed_distance,
            "forward_rate": self.forward_rate,
            "backward_rate": self.backward_rate,
            "max_drift": self.max_drift,
        }


def _approach_rate(traj: Trajectory, t_end: float, l0: float) -> float:
    ts = np.arange(traj.start.s, t_end, _SAMPLE_STEP)
    dist = traj.sample(ts).l - l0
    near = (dist > 0.0) & (dist < _NEAR_NECK)
    if np.count_nonzero(near) < 5:
        return math.nan
    return -float(linregress(ts[near], np.log(dist[near])).slope)


def _drift(traj: Trajectory, t_end: float, r0: float) -> float:
    ts = np.linspace(traj.start.s, t_end, 2001)
    smp = traj.sample(ts)
    radii = traj.surface.profile.radius_array(smp.l)
    return float(np.max(np.abs(np.abs(radii * np.sin(smp.psi)) - r0)))


@observed("trace_separatrix")
def trace_separatrix(
    surface: ProfileSurface,
    anchor: GeodesicState,
    bump: Optional[PerturbationBump] = None,
    seed_distance: float = DEFAULT_SEED_DISTANCE,
    tol: Optional[FlowTolerance] = None,
) -> SeparatrixTrace:
    """Trace the separatrix through ``anchor`` on the unperturbed surface.

    Raises:
        SeparatrixError: If a branch never comes within ``seed_distance`` of
            gamma_0 or the Clairaut value drifts by more than 1e-8
    """
    base = surface.unperturbed()
    lm = base.landmarks
    if lm is None:
        raise SeparatrixError("separatrices are defined on dumbbell surfaces only")
    anchor = anchor.with_time(0.0)
    r0 = lm.r0
    c = abs(base.clairaut(anchor))
    if abs(c - r0) > CLAIRAUT_DRIFT:
        raise SeparatrixError(f"anchor Clairaut value {c:.12g} differs from r0={r0}")

    forward = integrate_geodesic(base, anchor, 60.0, tol)
    t_plus = _first_below(forward, seed_distance, 0.0, lm.l0)
    if t_plus is None:
        raise SeparatrixError("forward branch did not approach gamma_0", details={"seed": seed_distance})
    backward = integrate_geodesic(base, flip(anchor), _cylinder_cap(base), tol)
    betas = backward.events_of("beta")
    t_minus = _first_below(backward, seed_distance, betas[0].time, lm.l0) if betas else None
    if t_minus is None:
        raise SeparatrixError("backward branch did not approach gamma_0", details={"seed": seed_distance})

    drift = max(_drift(forward, t_plus, r0), _drift(backward, t_minus, r0))
    if drift > CLAIRAUT_DRIFT:
        raise SeparatrixError(f"Clairaut drift {drift:.3g} along the trace; re-seed", details={"drift": drift})

    t1 = t2 = 0.0
    if bump is not None:
        t_center = -bump.to_chart(anchor.theta, anchor.l)[0]
        t1, t2 = t_center - bump.delta_t, t_center + bump.delta_t
    trace = SeparatrixTrace(
        anchor=anchor,
        clairaut_value=c,
        forward=forward,
        backward=backward,
        t_plus=t_plus,
        t_minus=t_minus,
        t1=t1,
        t2=t2,
        seed_distance=seed_distance,
        forward_rate=_approach_rate(forward, t_plus, lm.l0),
        backward_rate=_approach_rate(backward, t_minus, lm.l0),
        max_drift=drift,
    )
    logger.info(f"separatrix traced: t+={t_plus:.4f}, t-={t_minus:.4f}, "
                f"rates {trace.forward_rate:.4f}/{trace.backward_rate:.4f}, drift {drift:.2e}")
    return trace


@observed("separatrix_deviation")
def separatrix_deviation(
    surface: ProfileSurface,
    trace: SeparatrixTrace,
    window: float = 2.0,
    tol: Optional[FlowTolerance] = None,
) -> float:
    """Largest distance between the perturbed flow from the anchor and the unperturbed trace over [-window, window]."""
    worst = 0.0
    for start, ref in ((trace.anchor, trace.forward), (flip(trace.anchor), trace.backward)):
        ts = np.linspace(0.0, window, 201)
        traj = integrate_geodesic(surface, start, window, tol, t_eval=ts, record_levels=False)
        expected = ref.sample(traj.s)
        dist = surface.chart_distance(traj.theta, traj.l, expected.theta, expected.l)
        worst = max(worst, float(np.max(dist)))
    return worst


# ==========================================================================
# Splitting
# ==========================================================================


@dataclass
class SplittingResult:
    """Wavefront curvatures of the stable and unstable solutions at t2."""

    amplitude: float
    u_minus: float
    u_plus: float
    error: float
    u_minus_jacobi: float
    seed_distance: float
    conjugate_times: List[float] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.u_plus - self.u_minus

    @property
    def significant(self) -> bool:
        """|gap| exceeds a hundred times its error bar."""
        return abs(self.gap) > 100.0 * self.error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "A": self.amplitude,
            "u_minus": self.u_minus,
            "u_plus": self.u_plus,
            "gap": self.gap,
            "error": self.error,
            "u_minus_jacobi": self.u_minus_jacobi,
            "seed_distance": self.seed_distance,
            "conjugate_times": list(self.conjugate_times),
        }


def _gap_once(surface: ProfileSurface, trace: SeparatrixTrace, rate: float,
              tol: Optional[FlowTolerance]) -> Tuple[float, float, float, List[float]]:
    # u-: backward from the forward end, as +rate on the reversed geodesic
    start = flip(trace.forward_end).with_time(0.0)
    reversed_run = integrate_geodesic(surface, start, trace.t_plus - trace.t2, tol,
                                      jacobi=[(1.0, rate)], riccati=rate, record_levels=False)
    u_minus = -reversed_run.final_riccati.u
    y, dy = reversed_run.final_jacobi[0]
    u_minus_jacobi = -dy / y if y != 0.0 else math.inf

    start = trace.backward_end.with_time(-trace.t_minus)
    forward_run = integrate_geodesic(surface, start, trace.t_minus + trace.t2, tol,
                                     riccati=rate, record_levels=False)
    u_plus = forward_run.final_riccati.u
    conj = [e.time for e in forward_run.events if e.kind == "conjugate"]
    return u_minus, u_plus, u_minus_jacobi, conj


@observed("splitting_gap")
def splitting_gap(
    surface: ProfileSurface,
    trace: SeparatrixTrace,
    tol: Optional[FlowTolerance] = None,
    error_bar: bool = True,
) -> SplittingResult:
    """Splitting gap u+(t2) - u-(t2) on the perturbed surface.

    The error bar is the larger change of the gap under halving the
    integration tolerances and under halving the seed distance to gamma_0.
    """
    tol = tol or FlowTolerance()
    rate = hyperbolic_rate(surface)
    amplitude = surface.bump.amplitude if surface.bump is not None else 0.0
    u_minus, u_plus, u_minus_jacobi, conj = _gap_once(surface, trace, rate, tol)
    gap = u_plus - u_minus
    error = 0.0
    if error_bar:
        m, p, _, _ = _gap_once(surface, trace, rate, tol.halved())
        error = abs((p - m) - gap)
        finer = trace_separatrix(surface, trace.anchor, surface.bump, 0.5 * trace.seed_distance, tol)
        m, p, _, _ = _gap_once(surface, finer, rate, tol)
        error = max(error, abs((p - m) - gap))
    if conj:
        logger.warning(f"unstable solution passes conjugate points at {conj}")
    result = SplittingResult(amplitude, u_minus, u_plus, error, u_minus_jacobi, trace.seed_distance, conj)
    logger.info(f"splitting gap at A={amplitude:g}: {result.gap:.6e} +- {error:.1e}")
    return result


@observed("splitting_sweep")
def splitting_sweep(
    surface: ProfileSurface,
    bump: PerturbationBump,
    amplitudes: Sequence[float],
    tol: Optional[FlowTolerance] = None,
    seed_distance: float = DEFAULT_SEED_DISTANCE,
) -> List[SplittingResult]:
    """Splitting gap for each amplitude with the bump kept in place."""
    base = surface.unperturbed()
    an = bump.anchor
    trace = trace_separatrix(base, anchor_state(base, an.theta, an.l), bump, seed_distance, tol)
    return [splitting_gap(base.with_bump(bump.with_amplitude(a)), trace, tol) for a in amplitudes]


def linear_response_spread(results: Sequence[SplittingResult]) -> float:
    """Relative spread of gap/A over results with A != 0."""
    ratios = np.array([r.gap / r.amplitude for r in results if r.amplitude != 0.0])
    if ratios.size < 2:
        return 0.0
    return float((ratios.max() - ratios.min()) / abs(ratios.mean()))


__all__ = [
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
