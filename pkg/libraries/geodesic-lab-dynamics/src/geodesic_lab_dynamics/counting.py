"""Counting geodesic segments and the Jacobi-field integrals that control it.

Segments from p to q are found by shooting a fan of geodesics from p. Along
every ray the closest approaches to q are located; where the signed transversal
offset of q changes sign between two adjacent rays, the initial direction is
refined by a root solve. The same fan, with the Jacobi field y(0) = 0,
y'(0) = 1 carried along, gives

- the integral of n_T(p, .) over the surface: the integral of |y| over the
  direction circle and [0, T];
- the length of the front phi_T(S_p): the integral of sqrt(y^2 + y'^2) over the
  direction circle.
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
from geodesic_lab_core.exceptions import GrowthSeriesError, RefinementBudgetError
from geodesic_lab_geometry.flow import FlowTolerance, Trajectory, shoot
from geodesic_lab_geometry.states import TWO_PI, GeodesicState, wrap_angle, wrap_positive
from geodesic_lab_geometry.surface import ProfileSurface

logger = logging.getLogger(__name__)

# segments of length T + LENGTH_TIE still count
LENGTH_TIE = 1e-9
# |y| below this at q marks a (near) conjugate segment
CONJUGATE_JACOBI = 1e-4
_POLAR_CHART = 0.2
_APPROACH_WINDOW = 0.5
_HORIZON_MARGIN = 0.5
_MIN_TAIL = 5


@dataclass(frozen=True)
class SurfacePoint:
    """A point (theta, l) of a surface of revolution."""

    theta: float
    l: float

    def to_dict(self) -> Dict[str, float]:
        return {"theta": self.theta, "l": self.l}


# ==========================================================================
# Direction fans
# ==========================================================================


def uniform_directions(n_dirs: int) -> np.ndarray:
    if n_dirs < 4:
        raise ValueError(f"need at least 4 directions, got {n_dirs}")
    return TWO_PI * np.arange(n_dirs) / n_dirs


def great_circle_distance(p: SurfacePoint, q: SurfacePoint) -> float:
    """Distance on the unit sphere, with l the colatitude."""
    cos_d = math.cos(p.l) * math.cos(q.l) + math.sin(p.l) * math.sin(q.l) * math.cos(q.theta - p.theta)
    return math.acos(max(-1.0, min(1.0, cos_d)))


def great_circle_lengths(p: SurfacePoint, q: SurfacePoint, T: float) -> List[float]:
    """Lengths <= T of the great-circle arcs from p to q (p, q distinct and not antipodal)."""
    dist = great_circle_distance(p, q)
    lengths = []
    k = 0
    while dist + TWO_PI * k <= T:
        lengths.append(dist + TWO_PI * k)
        if TWO_PI * (k + 1) - dist <= T:
            lengths.append(TWO_PI * (k + 1) - dist)
        k += 1
    return sorted(lengths)


def _pad_front(values: np.ndarray, m: int) -> np.ndarray:
    # shoot() starts pole rays at the edge of the polar disc
    if len(values) >= m:
        return values
    return np.concatenate([np.full((m - len(values),) + values.shape[1:], values[0]), values])


@dataclass
class RayFan:
    """Geodesics from p in every direction of a grid, sampled on a common time grid."""

    surface: ProfileSurface
    p: SurfacePoint
    directions: np.ndarray
    times: np.ndarray
    theta: np.ndarray
    l: np.ndarray
    psi: np.ndarray
    y: np.ndarray
    horizon: float
    tol: Optional[FlowTolerance] = None

    @property
    def spacing(self) -> float:
        return TWO_PI / len(self.directions)


@observed("shoot_fan")
def shoot_fan(
    surface: ProfileSurface,
    p: SurfacePoint,
    n_dirs: int,
    T: float,
    tol: Optional[FlowTolerance] = None,
    dt: float = 0.02,
) -> RayFan:
    """Shoot ``n_dirs`` equally spaced geodesics from p up to T plus a margin."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    directions = uniform_directions(n_dirs)
    horizon = T + _HORIZON_MARGIN
    m = int(math.ceil(horizon / dt)) + 1
    times = np.linspace(0.0, horizon, m)
    theta, l, psi, y = (np.empty((n_dirs, m)) for _ in range(4))
    for i, direction in enumerate(directions):
        traj = shoot(surface, p.theta, p.l, float(direction), horizon, tol, t_eval=times)
        theta[i] = _pad_front(traj.theta, m)
        l[i] = _pad_front(traj.l, m)
        psi[i] = _pad_front(traj.psi, m)
        y[i] = _pad_front(traj.jacobi[:, 0, 0], m)
    logger.debug(f"shot fan of {n_dirs} rays from ({p.theta:.4f}, {p.l:.4f}) to s={horizon:.3f}")
    return RayFan(surface, p, directions, times, theta, l, psi, y, horizon, tol)


def transversal_offsets(surface: ProfileSurface, q: SurfacePoint, theta, l, psi) -> Tuple[np.ndarray, np.ndarray]:
    """Position of q relative to points moving with angle psi: (along-track, signed offset).

    Within 0.2 of a pole (measured at q) both are taken in the flat polar chart,
    otherwise in the local chart dl^2 + r(l_mid)^2 dtheta^2.
    """
    theta, l, psi = (np.asarray(v, dtype=float) for v in (theta, l, psi))
    cos_psi, sin_psi = np.cos(psi), np.sin(psi)
    near_q = q.l < _POLAR_CHART
    near_p = q.l > surface.length - _POLAR_CHART
    if near_q or near_p:
        a = surface.length - l if near_p else l
        aq = surface.length - q.l if near_p else q.l
        dx = aq * math.cos(q.theta) - a * np.cos(theta)
        dy = aq * math.sin(q.theta) - a * np.sin(theta)
        radial = -cos_psi if near_p else cos_psi
        ux = radial * np.cos(theta) - sin_psi * np.sin(theta)
        uy = radial * np.sin(theta) + sin_psi * np.cos(theta)
        return ux * dx + uy * dy, ux * dy - uy * dx
    dtheta = np.mod(q.theta - theta + math.pi, TWO_PI) - math.pi
    dl = q.l - l
    r = surface.profile.radius_array(np.clip(0.5 * (l + q.l), 0.0, surface.length))
    return cos_psi * dl + sin_psi * r * dtheta, cos_psi * r * dtheta - sin_psi * dl


# ==========================================================================
# Segment counting
# ==========================================================================


@dataclass(frozen=True)
class Segment:
    """Geodesic segment from p to q."""

    direction: float
    length: float
    jacobi: float
    conjugate: bool = False

    @property
    def condition(self) -> float:
        """Condition number of the direction root solve, 1/|y(length)|."""
        return math.inf if self.jacobi == 0.0 else 1.0 / abs(self.jacobi)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "direction": self.direction,
            "length": self.length,
            "jacobi": self.jacobi,
            "conjugate": self.conjugate,
        }


@dataclass
class CountResult:
    """n_T(p, q) with the segments found."""

    p: SurfacePoint
    q: SurfacePoint
    T: float
    segments: List[Segment]
    n_dirs: int
    tol_q: float
    warnings: List[str] = field(default_factory=list)
    conjugate_times: List[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.segments)

    @property
    def lengths(self) -> List[float]:
        return [seg.length for seg in self.segments]

    @property
    def conjugate(self) -> bool:
        return bool(self.conjugate_times) or any(seg.conjugate for seg in self.segments)

    def up_to(self, T: float) -> "CountResult":
        """The count for a shorter horizon, from the same segments."""
        if T > self.T:
            raise ValueError(f"horizon {T} exceeds the counted horizon {self.T}")
        kept = [seg for seg in self.segments if seg.length <= T + LENGTH_TIE]
        conj = [t for t in self.conjugate_times if t <= T + LENGTH_TIE]
        return CountResult(self.p, self.q, T, kept, self.n_dirs, self.tol_q, list(self.warnings), conj)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p.to_dict(),
            "q": self.q.to_dict(),
            "T": self.T,
            "count": self.count,
            "segments": [seg.to_dict() for seg in self.segments],
            "n_dirs": self.n_dirs,
            "tol_q": self.tol_q,
            "conjugate": self.conjugate,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class _Approach:
    time: float
    offset: float
    y: float


def _closest_approaches(times: np.ndarray, along: np.ndarray, offset: np.ndarray, y: np.ndarray,
                        coarse: float) -> List[_Approach]:
    a0, a1 = along[:-1], along[1:]
    dt = float(times[1] - times[0])
    # a genuine pass changes the along-track coordinate by about dt per sample;
    # larger jumps come from the theta cut of the chart
    idx = np.nonzero((a0 > 0.0) & (a1 <= 0.0) & (a0 - a1 < 4.0 * dt + 1e-12))[0]
    found = []
    for k in idx:
        frac = a0[k] / (a0[k] - a1[k])
        h = offset[k] + frac * (offset[k + 1] - offset[k])
        if abs(h) >= coarse:
            continue
        t = times[k] + frac * dt
        yy = y[k] + frac * (y[k + 1] - y[k])
        found.append(_Approach(float(t), float(h), float(yy)))
    return found


class _NoApproach(Exception):
    pass


class _Probe:
    """Offset of q at the closest approach of a single ray near a guessed time."""

    def __init__(self, surface: ProfileSurface, p: SurfacePoint, q: SurfacePoint,
                 tol: Optional[FlowTolerance], horizon: float):
        self.surface = surface
        self.p = p
        self.q = q
        self.tol = tol
        self.horizon = horizon

    def _trajectory(self, direction: float, t_hi: float) -> Trajectory:
        return shoot(self.surface, self.p.theta, self.p.l, direction, t_hi, self.tol)

    def _along_offset(self, traj: Trajectory, ts) -> Tuple[np.ndarray, np.ndarray, Any]:
        smp = traj.sample(ts)
        along, offset = transversal_offsets(self.surface, self.q, smp.theta, smp.l, smp.psi)
        return along, offset, smp

    def evaluate(self, direction: float, t_guess: float) -> Tuple[float, float, float]:
        """(offset, time, y) at the closest approach nearest ``t_guess``."""
        t_hi = min(t_guess + _APPROACH_WINDOW, self.horizon)
        traj = self._trajectory(direction, t_hi)
        lo = max(t_guess - _APPROACH_WINDOW, traj.start.s)
        ts = np.linspace(lo, traj.end.s, 41)
        along, _, _ = self._along_offset(traj, ts)
        cand = np.nonzero((along[:-1] > 0.0) & (along[1:] <= 0.0))[0]
        if cand.size == 0:
            raise _NoApproach()
        k = int(cand[np.argmin(np.abs(ts[cand] - t_guess))])
        if along[k + 1] == 0.0:
            t_star = float(ts[k + 1])
        else:
            t_star = brentq(lambda t: float(self._along_offset(traj, [t])[0][0]),
                            float(ts[k]), float(ts[k + 1]), xtol=1e-13, rtol=1e-14)
        _, offset, smp = self._along_offset(traj, [t_star])
        return float(offset[0]), t_star, float(smp.jacobi[0, 0, 0])


def _refine(probe: _Probe, lo: float, hi: float, t_guess: float, tol_q: float,
            warnings: List[str]) -> Optional[Segment]:
    try:
        f_lo = probe.evaluate(lo, t_guess)[0]
        f_hi = probe.evaluate(hi, t_guess)[0]
    except _NoApproach:
        warnings.append(f"lost the approach near s={t_guess:.4f} between directions {lo:.6f} and {hi:.6f}")
        return None
    if f_lo == 0.0:
        root = lo
    elif f_hi == 0.0:
        root = hi
    elif f_lo * f_hi > 0.0:
        warnings.append(f"no sign change near s={t_guess:.4f} between directions {lo:.6f} and {hi:.6f}")
        return None
    else:
        def offset(direction: float) -> float:
            try:
                return probe.evaluate(direction, t_guess)[0]
            except _NoApproach:
                return f_lo
        root = brentq(offset, lo, hi, xtol=tol_q, rtol=4 * np.finfo(float).eps)
    _, length, y = probe.evaluate(root, t_guess)
    return Segment(wrap_positive(root), length, y, abs(y) < CONJUGATE_JACOBI)


def _merge(segments: List[Segment]) -> List[Segment]:
    merged: List[Segment] = []
    for seg in sorted(segments, key=lambda s: (s.length, s.direction)):
        if any(abs(seg.length - m.length) < 1e-6 and abs(wrap_angle(seg.direction - m.direction)) < 1e-6
               for m in merged):
            continue
        merged.append(seg)
    return merged


@observed("count_segments")
def count_segments(
    surface: ProfileSurface,
    p: SurfacePoint,
    q: SurfacePoint,
    T: float,
    n_dirs: int = 256,
    tol_q: float = 1e-12,
    tol: Optional[FlowTolerance] = None,
    *,
    fan: Optional[RayFan] = None,
    coarse: float = 0.25,
) -> CountResult:
    """Count geodesic segments from p to q of length <= T.

    Args:
        surface: Profile surface (a bump is allowed)
        p: Start point; within the polar disc it is taken as the pole
        q: End point, distinct from p
        T: Horizon (> 0)
        n_dirs: Rays in the coarse fan
        tol_q: Tolerance of the direction root solve
        tol: Integrator tolerances
        fan: Precomputed fan from p reaching at least T (shared across q)
        coarse: Offset below which a closest approach is a candidate

    Returns:
        CountResult; near-conjugate segments are flagged, unresolved
        candidates are reported as warnings
    """
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    if float(surface.chart_distance(p.theta, p.l, q.theta, q.l)) < 1e-9:
        raise ValueError("p and q must be distinct")
    if fan is None:
        fan = shoot_fan(surface, p, n_dirs, T, tol)
    elif fan.horizon < T:
        raise ValueError(f"fan reaches s={fan.horizon}, below T={T}")
    n = len(fan.directions)

    approaches: List[List[_Approach]] = []
    for i in range(n):
        along, offset = transversal_offsets(surface, q, fan.theta[i], fan.l[i], fan.psi[i])
        approaches.append(_closest_approaches(fan.times, along, offset, fan.y[i], coarse))

    warnings: List[str] = []
    conjugate_times = sorted({round(a.time, 6) for row in approaches for a in row
                              if abs(a.y) < CONJUGATE_JACOBI and a.time <= T + LENGTH_TIE})
    brackets: List[Tuple[float, float, float]] = []
    matched = [[False] * len(row) for row in approaches]
    for i in range(n):
        j = (i + 1) % n
        lo = float(fan.directions[i])
        hi = float(fan.directions[j]) + (TWO_PI if j == 0 else 0.0)
        for a_idx, a in enumerate(approaches[i]):
            if not approaches[j]:
                continue
            b_idx = int(np.argmin([abs(b.time - a.time) for b in approaches[j]]))
            b = approaches[j][b_idx]
            if abs(b.time - a.time) > _APPROACH_WINDOW:
                continue
            matched[i][a_idx] = matched[j][b_idx] = True
            if a.offset * b.offset <= 0.0 and min(a.time, b.time) <= T + _HORIZON_MARGIN:
                brackets.append((lo, hi, 0.5 * (a.time + b.time)))
    unresolved = sum(1 for i, row in enumerate(approaches) for k, a in enumerate(row)
                     if not matched[i][k] and abs(a.offset) < 0.5 * coarse)
    if unresolved:
        warnings.append(f"{unresolved} close approaches without a neighbouring ray; increase n_dirs")

    probe = _Probe(surface, p, q, fan.tol, fan.horizon)
    found = []
    for lo, hi, t_guess in brackets:
        seg = _refine(probe, lo, hi, t_guess, tol_q, warnings)
        if seg is not None and seg.length <= T + LENGTH_TIE:
            found.append(seg)
    segments = _merge(found)
    for seg in segments:
        if seg.conjugate:
            warnings.append(f"near-conjugate segment at s={seg.length:.6f} (condition {seg.condition:.3g})")
    for message in warnings:
        logger.warning(f"count_segments: {message}")
    logger.info(f"n_T(p, q) = {len(segments)} for T={T} with {n} rays")
    return CountResult(p, q, T, segments, n, tol_q, warnings, [float(t) for t in conjugate_times])


# ==========================================================================
# Jacobi integrals over the direction circle
# ==========================================================================


@dataclass(frozen=True)
class IntegralEstimate:
    """A quadrature over the direction circle with an error estimate."""

    T: float
    value: float
    error: float
    n_dirs: int

    def to_dict(self) -> Dict[str, Any]:
        return {"T": self.T, "value": self.value, "error": self.error, "n_dirs": self.n_dirs}


def _circle_mean(values: np.ndarray) -> Tuple[float, float]:
    """2*pi * mean over a uniform periodic grid, with the half-grid difference as error."""
    full = TWO_PI * float(np.mean(values, axis=0))
    half = TWO_PI * float(np.mean(values[::2], axis=0))
    return full, abs(full - half)


def _final_accumulators(surface: ProfileSurface, p: SurfacePoint, T: float, n_dirs: int,
                        tol: Optional[FlowTolerance]) -> Tuple[np.ndarray, np.ndarray]:
    """Final (y, y') and the three running integrals for every ray of a uniform fan."""
    finals, accs = [], []
    for direction in uniform_directions(n_dirs):
        traj = shoot(surface, p.theta, p.l, float(direction), T, tol)
        finals.append(traj.final_jacobi[0])
        accs.append(traj.final_accumulators[0])
    return np.array(finals), np.array(accs)


@observed("integral_count")
def integral_count(
    surface: ProfileSurface,
    p: SurfacePoint,
    T: float,
    n_dirs: int = 256,
    tol: Optional[FlowTolerance] = None,
) -> IntegralEstimate:
    """Integral of n_T(p, q) over q, as the integral of |y| over directions and [0, T]."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    _, accs = _final_accumulators(surface, p, T, n_dirs, tol)
    value, error = _circle_mean(accs[:, 1])
    return IntegralEstimate(T, value, error, n_dirs)


@observed("integral_count_series")
def integral_count_series(
    surface: ProfileSurface,
    p: SurfacePoint,
    times: Sequence[float],
    n_dirs: int = 256,
    tol: Optional[FlowTolerance] = None,
    label: str = "integral_count",
) -> "GrowthSeries":
    """integral_count at every time of ``times`` from a single fan."""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] <= 0.0:
        raise ValueError("times must be positive")
    rows = []
    for direction in uniform_directions(n_dirs):
        traj = shoot(surface, p.theta, p.l, float(direction), float(times[-1]), tol, t_eval=times)
        rows.append(_pad_front(traj.accumulators[:, 0, 1], len(times)))
    values = TWO_PI * np.mean(np.array(rows), axis=0)
    return GrowthSeries(times, values, label=label)


@observed("front_length_integral")
def front_length_integral(
    surface: ProfileSurface,
    p: SurfacePoint,
    T: float,
    n_dirs: int = 256,
    tol: Optional[FlowTolerance] = None,
) -> IntegralEstimate:
    """Integral over [0, T] of the front length, by co-integration of sqrt(y^2 + y'^2)."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    _, accs = _final_accumulators(surface, p, T, n_dirs, tol)
    value, error = _circle_mean(accs[:, 2])
    return IntegralEstimate(T, value, error, n_dirs)


@dataclass(frozen=True)
class VolumeBound:
    """integral_count(T) against the time integral of the front length."""

    count_integral: IntegralEstimate
    front_integral: IntegralEstimate

    @property
    def holds(self) -> bool:
        slack = self.count_integral.error + self.front_integral.error
        return self.count_integral.value <= self.front_integral.value + slack

    def to_dict(self) -> Dict[str, Any]:
        return {
            "integral_count": self.count_integral.to_dict(),
            "front_length_integral": self.front_integral.to_dict(),
            "holds": self.holds,
        }


@observed("volume_bound")
def volume_bound(surface: ProfileSurface, p: SurfacePoint, T: float, n_dirs: int = 256,
                 tol: Optional[FlowTolerance] = None) -> VolumeBound:
    _, accs = _final_accumulators(surface, p, T, n_dirs, tol)
    count = IntegralEstimate(T, *_circle_mean(accs[:, 1]), n_dirs)
    front = IntegralEstimate(T, *_circle_mean(accs[:, 2]), n_dirs)
    return VolumeBound(count, front)


@dataclass(frozen=True)
class FrontBound:
    """front_length(T) <= integral |y(T)| + 2*pi + L * integral_count(T)."""

    T: float
    front_length: float
    endpoint_integral: float
    count_integral: float
    curvature_bound: float
    error: float

    @property
    def rhs(self) -> float:
        return self.endpoint_integral + TWO_PI + self.curvature_bound * self.count_integral

    @property
    def holds(self) -> bool:
        return self.front_length <= self.rhs + self.error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "lhs": self.front_length,
            "rhs": self.rhs,
            "L": self.curvature_bound,
            "error": self.error,
            "holds": self.holds,
        }


@observed("front_length_bound")
def front_length_bound(
    surface: ProfileSurface,
    p: SurfacePoint,
    T: float,
    n_dirs: int = 256,
    tol: Optional[FlowTolerance] = None,
    curvature_bound: Optional[float] = None,
) -> FrontBound:
    """Both sides of the curvature-corrected bound on the front length."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    L = curvature_bound if curvature_bound is not None else surface.sup_abs_curvature()
    finals, accs = _final_accumulators(surface, p, T, n_dirs, tol)
    lhs, e1 = _circle_mean(np.hypot(finals[:, 0], finals[:, 1]))
    ends, e2 = _circle_mean(np.abs(finals[:, 0]))
    count, e3 = _circle_mean(accs[:, 1])
    return FrontBound(T, lhs, ends, count, L, e1 + e2 + L * e3)


@dataclass(frozen=True)
class FrontSeries:
    """integral_count, front length and the right side of the L-corrected bound on one time grid."""

    count: "GrowthSeries"
    front: "GrowthSeries"
    bound: "GrowthSeries"

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"T": float(t), "integral_count": float(c), "front_length": float(f), "front_bound": float(b)}
                for t, c, f, b in zip(self.count.times, self.count.values, self.front.values, self.bound.values)]


@observed("front_series")
def front_series(
    surface: ProfileSurface,
    p: SurfacePoint,
    times: Sequence[float],
    n_dirs: int = 256,
    tol: Optional[FlowTolerance] = None,
    curvature_bound: Optional[float] = None,
) -> FrontSeries:
    """The three growth series of ``front_length_bound`` sampled at ``times`` from a single fan."""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] <= 0.0:
        raise ValueError("times must be positive")
    L = curvature_bound if curvature_bound is not None else surface.sup_abs_curvature()
    counts, fronts, ends = [], [], []
    for direction in uniform_directions(n_dirs):
        traj = shoot(surface, p.theta, p.l, float(direction), float(times[-1]), tol, t_eval=times)
        jac = _pad_front(traj.jacobi[:, 0, :], len(times))
        counts.append(_pad_front(traj.accumulators[:, 0, 1], len(times)))
        fronts.append(np.hypot(jac[:, 0], jac[:, 1]))
        ends.append(np.abs(jac[:, 0]))
    count = TWO_PI * np.mean(np.array(counts), axis=0)
    front = TWO_PI * np.mean(np.array(fronts), axis=0)
    bound = TWO_PI * np.mean(np.array(ends), axis=0) + TWO_PI + L * count
    return FrontSeries(
        GrowthSeries(times, count, label="integral_count"),
        GrowthSeries(times, front, label="front_length"),
        GrowthSeries(times, bound, label="front_bound"),
    )


# ==========================================================================
# Front length with adaptive refinement
# ==========================================================================


@dataclass(frozen=True)
class FrontSample:
    """Endpoint of the ray with initial angle ``direction`` at time T."""

    direction: float
    state: GeodesicState
    y: float
    dy: float

    @property
    def speed(self) -> float:
        return math.hypot(self.y, self.dy)


def _sasaki_chord(surface: ProfileSurface, a: FrontSample, b: FrontSample) -> float:
    """Distance in the unit tangent bundle between two nearby front samples."""
    estimate = abs(b.direction - a.direction) * 0.5 * (a.speed + b.speed)
    near_pole = min(a.state.l, b.state.l) < _POLAR_CHART or \
        max(a.state.l, b.state.l) > surface.length - _POLAR_CHART
    if near_pole:
        return estimate
    base = float(surface.chart_distance(a.state.theta, a.state.l, b.state.theta, b.state.l))
    _, dr, _ = surface.derivatives(0.5 * (a.state.l + b.state.l))
    turn = wrap_angle(b.state.psi - a.state.psi) + dr * wrap_angle(b.state.theta - a.state.theta)
    return math.hypot(base, turn)


@dataclass
class FrontCurve:
    """Polygonal approximation of phi_T(S_p), ordered by initial direction."""

    p: SurfacePoint
    T: float
    samples: List[FrontSample]
    refine_tol: float
    budget: int
    budget_exceeded: bool = False
    rounds: int = 0

    @property
    def directions(self) -> np.ndarray:
        return np.array([s.direction for s in self.samples])

    def states(self) -> List[GeodesicState]:
        return [s.state for s in self.samples]

    def _pairs(self):
        n = len(self.samples)
        for i in range(n):
            a = self.samples[i]
            b = self.samples[(i + 1) % n]
            if i == n - 1:
                b = FrontSample(b.direction + TWO_PI, b.state, b.y, b.dy)
            yield a, b

    def quadrature(self) -> float:
        """Trapezoid rule for the integral of sqrt(y^2 + y'^2) on the (non-uniform) direction grid."""
        return sum(0.5 * (a.speed + b.speed) * (b.direction - a.direction) for a, b in self._pairs())

    def polygonal(self, surface: ProfileSurface) -> float:
        return sum(_sasaki_chord(surface, a, b) for a, b in self._pairs())

    def max_spacing(self, surface: ProfileSurface) -> float:
        return max(max(_sasaki_chord(surface, a, b), (b.direction - a.direction) * max(a.speed, b.speed))
                   for a, b in self._pairs())

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"direction": s.direction, "theta": s.state.theta, "l": s.state.l, "phi": s.state.phi,
                 "heading": s.state.heading, "y": s.y, "dy": s.dy} for s in self.samples]


@dataclass(frozen=True)
class FrontLength:
    T: float
    length: float
    polygonal: float
    curve: FrontCurve

    @property
    def flagged(self) -> bool:
        return self.curve.budget_exceeded

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "length": self.length,
            "polygonal": self.polygonal,
            "samples": len(self.curve.samples),
            "rounds": self.curve.rounds,
            "budget_exceeded": self.curve.budget_exceeded,
        }


def _front_sample(surface: ProfileSurface, p: SurfacePoint, direction: float, T: float,
                  tol: Optional[FlowTolerance]) -> FrontSample:
    traj = shoot(surface, p.theta, p.l, direction, T, tol)
    y, dy = traj.final_jacobi[0]
    return FrontSample(direction, traj.end, float(y), float(dy))


@observed("front_length")
def front_length(
    surface: ProfileSurface,
    p: SurfacePoint,
    T: float,
    refine_tol: float = 0.05,
    tol: Optional[FlowTolerance] = None,
    *,
    initial_dirs: int = 64,
    budget: int = 20000,
    strict: bool = False,
) -> FrontLength:
    """Length of the front phi_T(S_p) with adaptive insertion of directions.

    Directions are bisected wherever adjacent front samples are more than
    ``refine_tol`` apart in the unit tangent bundle.

    Raises:
        RefinementBudgetError: If ``strict`` and more than ``budget`` samples are needed
    """
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    samples = [_front_sample(surface, p, float(v), T, tol) for v in uniform_directions(initial_dirs)]
    curve = FrontCurve(p, T, samples, refine_tol, budget)
    while True:
        wide = [i for i, (a, b) in enumerate(curve._pairs())
                if max(_sasaki_chord(surface, a, b), (b.direction - a.direction) * max(a.speed, b.speed)) > refine_tol]
        if not wide:
            break
        if len(curve.samples) + len(wide) > budget:
            if strict:
                raise RefinementBudgetError(budget, details={"T": T, "samples": len(curve.samples)})
            curve.budget_exceeded = True
            logger.warning(f"front_length: refinement budget {budget} reached at T={T}, result flagged")
            break
        pairs = list(curve._pairs())
        inserted = {i: _front_sample(surface, p, wrap_positive(0.5 * (pairs[i][0].direction + pairs[i][1].direction)), T, tol)
                    for i in wide}
        refined: List[FrontSample] = []
        for i, sample in enumerate(curve.samples):
            refined.append(sample)
            if i in inserted:
                refined.append(inserted[i])
        # a midpoint past 2*pi wraps to the front of the list
        curve.samples = sorted(refined, key=lambda s: s.direction)
        curve.rounds += 1
    length = curve.quadrature()
    logger.info(f"front length at T={T}: {length:.6g} from {len(curve.samples)} samples")
    return FrontLength(T, length, curve.polygonal(surface), curve)


# ==========================================================================
# Growth rates
# ==========================================================================


@dataclass
class GrowthSeries:
    """Samples (T_k, value_k) of a quantity expected to grow exponentially."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""
    tail_fraction: float = 0.5

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise GrowthSeriesError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0.0):
            raise GrowthSeriesError("times must be strictly increasing")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise GrowthSeriesError(f"tail fraction must lie in (0, 1], got {self.tail_fraction}")

    def tail(self) -> Tuple[np.ndarray, np.ndarray]:
        start = int(math.floor((1.0 - self.tail_fraction) * len(self.times)))
        return self.times[start:], self.values[start:]

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"T": float(t), "value": float(v)} for t, v in zip(self.times, self.values)]


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares slope of log(value) on the tail window with a bootstrap band."""

    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_tail: int
    window: Tuple[float, float]

    def below(self, other: "GrowthFit") -> bool:
        """True when this band lies strictly below ``other``'s."""
        return self.ci_high < other.ci_low

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "ci": [self.ci_low, self.ci_high],
            "n_tail": self.n_tail,
            "window": list(self.window),
        }


def _slopes(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Least-squares slopes of each row of v against the matching row of t."""
    tm = t.mean(axis=-1, keepdims=True)
    vm = v.mean(axis=-1, keepdims=True)
    var = ((t - tm) ** 2).sum(axis=-1)
    cov = ((t - tm) * (v - vm)).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return cov / var


@observed("growth_rate")
def growth_rate(
    series: GrowthSeries,
    n_boot: int = 1000,
    seed: int = 0,
    confidence: float = 0.95,
) -> GrowthFit:
    """Fit log(value) = slope * T + intercept on the tail of ``series``.

    Raises:
        GrowthSeriesError: On non-positive values or fewer than 5 tail samples
    """
    if np.any(series.values <= 0.0):
        raise GrowthSeriesError("series has non-positive values", details={"label": series.label})
    t, v = series.tail()
    if len(t) < _MIN_TAIL:
        raise GrowthSeriesError(f"need at least {_MIN_TAIL} tail samples, got {len(t)}",
                                details={"label": series.label})
    logv = np.log(v)
    fit = linregress(t, logv)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(t), size=(n_boot, len(t)))
    boot = _slopes(t[idx], logv[idx])
    boot = boot[np.isfinite(boot)]
    alpha = 0.5 * (1.0 - confidence)
    if boot.size:
        lo, hi = np.quantile(boot, [alpha, 1.0 - alpha])
    else:
        lo = hi = fit.slope
    # an exact fit resamples to the same slope up to rounding
    lo, hi = min(float(lo), float(fit.slope)), max(float(hi), float(fit.slope))
    return GrowthFit(float(fit.slope), float(fit.intercept), lo, hi, len(t), (float(t[0]), float(t[-1])))


# ==========================================================================
# Monte Carlo over the surface
# ==========================================================================


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples}


def sample_area_points(surface: ProfileSurface, n: int, rng: np.random.Generator) -> List[SurfacePoint]:
    """Points distributed by area: theta uniform, l by inverse CDF of 2*pi*r(l) dl."""
    grid = np.linspace(0.0, surface.length, 8001)
    cumulative = surface.profile.cumulative_area(grid)
    thetas = rng.uniform(0.0, TWO_PI, n)
    ls = np.interp(rng.uniform(0.0, cumulative[-1], n), cumulative, grid)
    return [SurfacePoint(float(t), float(l)) for t, l in zip(thetas, ls)]


def _area_mean(area: float, values: Sequence[float]) -> MonteCarloEstimate:
    values = np.asarray(values, dtype=float)
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return MonteCarloEstimate(area * float(np.mean(values)), area * stderr, len(values))


@observed("double_integral_count")
def double_integral_count(
    surface: ProfileSurface,
    T: float,
    n_p_samples: int = 16,
    n_dirs: int = 128,
    rng: Optional[np.random.Generator] = None,
    tol: Optional[FlowTolerance] = None,
) -> MonteCarloEstimate:
    """Integral of n_T over M x M: area times the mean of integral_count over random p."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    rng = rng if rng is not None else np.random.default_rng(0)
    points = sample_area_points(surface, n_p_samples, rng)
    values = [integral_count(surface, p, T, n_dirs, tol).value for p in points]
    return _area_mean(surface.area(), values)


@observed("monte_carlo_count")
def monte_carlo_count(
    surface: ProfileSurface,
    p: SurfacePoint,
    T: float,
    n_q: int = 200,
    n_dirs: int = 256,
    rng: Optional[np.random.Generator] = None,
    tol: Optional[FlowTolerance] = None,
    *,
    target_stderr: Optional[float] = None,
    max_q: Optional[int] = None,
) -> MonteCarloEstimate:
    """Area times the mean of n_T(p, q) over random q, from one shared fan.

    With ``target_stderr`` further batches of ``n_q`` points are drawn until the
    standard error reaches it or ``max_q`` points have been counted.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    fan = shoot_fan(surface, p, n_dirs, T, tol)
    area = surface.area()
    limit = max_q if max_q is not None else n_q
    counts: List[int] = []
    while True:
        for q in sample_area_points(surface, n_q, rng):
            if float(surface.chart_distance(p.theta, p.l, q.theta, q.l)) < 1e-9:
                continue
            counts.append(count_segments(surface, p, q, T, fan=fan).count)
        estimate = _area_mean(area, counts)
        if target_stderr is None or estimate.stderr <= target_stderr or len(counts) >= limit:
            break
    logger.debug(f"monte carlo count at T={T}: {estimate.value:.6g} +- {estimate.stderr:.3g} from {len(counts)} points")
    return estimate


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
]
