"""Transit maps between the sections S1..S4 and invariant-circle witnesses.

The sections are the unit vectors over the latitudes alpha and beta that point
across them: S1 (alpha, into the cylinder), S2 (beta, into the cap D), S3
(beta, out of D) and S4 (alpha, out of the cylinder into the region R^). Points
carry (theta, phi) with phi the angle to the direction of travel along the
meridian, so S3 and S4 use heading -1.

Transits:

- cylinder S1 -> S2 and S3 -> S4: closed form, theta +- d tan(phi) / rho;
- cap S2 -> S3 and region S4 -> S1: theta + a(phi), phi -> -phi, with a
  tabulated from Clairaut quadrature (unperturbed), or by integrating the flow
  when a bump sits on the flat band.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import BarycentricInterpolator, RectBivariateSpline

from geodesic_lab_core.decorators import observed
from geodesic_lab_core.exceptions import EscapeError, SectionDomainError
from geodesic_lab_geometry.flow import FlowTolerance, StopCondition, integrate_geodesic
from geodesic_lab_geometry.states import TWO_PI, GeodesicState, wrap_angle, wrap_positive
from geodesic_lab_geometry.surface import ProfileSurface

logger = logging.getLogger(__name__)

SECTIONS = ("S1", "S2", "S3", "S4")
_NEXT = {"S1": "S2", "S2": "S3", "S3": "S4", "S4": "S1"}
# (level, heading) of each section
_LAYOUT = {"S1": ("alpha", 1), "S2": ("beta", 1), "S3": ("beta", -1), "S4": ("alpha", -1)}
DEFAULT_NODES = 64
A2_PHI_MAX = 1.2
A4_PHI_FRACTION = 0.95
REGION_TIME_CAP = 200.0

MapFn = Callable[[float, float], Tuple[float, float]]


def _landmarks(surface: ProfileSurface):
    if surface.landmarks is None:
        raise ValueError("section maps are defined on dumbbell surfaces only")
    return surface.landmarks


def separatrix_phi(surface: ProfileSurface) -> float:
    """phi_0 = arcsin(r0 / rho): section angle of the geodesics asymptotic to gamma_0."""
    lm = _landmarks(surface)
    return math.asin(lm.r0 / lm.rho)


@dataclass(frozen=True)
class SectionPoint:
    """A crossing direction (theta, phi) on one of the sections S1..S4."""

    theta: float
    phi: float
    section: str

    def __post_init__(self) -> None:
        if self.section not in SECTIONS:
            raise ValueError(f"unknown section {self.section!r}")
        if not abs(self.phi) < 0.5 * math.pi:
            raise ValueError(f"|phi| must be below pi/2, got {self.phi}")

    def state(self, surface: ProfileSurface, s: float = 0.0) -> GeodesicState:
        """The unit vector this point stands for."""
        lm = _landmarks(surface)
        level, heading = _LAYOUT[self.section]
        l = lm.l_alpha if level == "alpha" else lm.l_beta
        return GeodesicState(self.theta, l, self.phi, s, heading)

    @classmethod
    def from_state(cls, state: GeodesicState, section: str) -> "SectionPoint":
        return cls(state.theta, state.phi, section)

    def to_dict(self) -> Dict[str, Any]:
        return {"theta": self.theta, "phi": self.phi, "section": self.section}


# ==========================================================================
# Cylinder transit
# ==========================================================================


def psi_cylinder(d: float, rho: float, pt: SectionPoint) -> SectionPoint:
    """Transit of the cylinder of length d and radius rho (S1 -> S2 or S3 -> S4)."""
    if pt.section not in ("S1", "S3"):
        raise ValueError(f"cylinder transit starts on S1 or S3, got {pt.section}")
    advance = d * math.tan(pt.phi) / rho
    # on S3 the travel direction is reversed
    theta = pt.theta + advance if pt.section == "S1" else pt.theta - advance
    return SectionPoint(theta, pt.phi, _NEXT[pt.section])


# ==========================================================================
# Turn transits
# ==========================================================================


@dataclass
class TransitFunction:
    """Angular advance a(phi) of a turn through the cap (``a2``) or the region (``a4``).

    Stored as the odd part g(phi) = a(phi) - pi on Chebyshev nodes; the
    evaluation symmetrizes so that a(0) = pi and a(phi) + a(-phi) = 2*pi hold
    exactly. The transit time is tabulated alongside.
    """

    name: str
    phi_max: float
    nodes: np.ndarray
    advance: np.ndarray
    times: np.ndarray
    _odd: BarycentricInterpolator = field(init=False, repr=False)
    _time: BarycentricInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._odd = BarycentricInterpolator(self.nodes, self.advance - math.pi)
        self._time = BarycentricInterpolator(self.nodes, self.times)

    def _check(self, phi: float) -> None:
        if abs(phi) > self.phi_max:
            raise SectionDomainError(self.name, phi, self.phi_max)

    def __call__(self, phi: float) -> float:
        self._check(phi)
        return math.pi + 0.5 * (float(self._odd(phi)) - float(self._odd(-phi)))

    def transit_time(self, phi: float) -> float:
        self._check(phi)
        return 0.5 * (float(self._time(phi)) + float(self._time(-phi)))

    @property
    def section_in(self) -> str:
        return "S2" if self.name == "a2" else "S4"

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"phi": float(p), "advance": float(a), "time": float(t)}
                for p, a, t in zip(self.nodes, self.advance, self.times)]


def chebyshev_nodes(n: int, half_width: float) -> np.ndarray:
    k = np.arange(n)
    return np.sort(half_width * np.cos(math.pi * (k + 0.5) / n))


def turn_advance(surface: ProfileSurface, name: str, phi: float) -> Tuple[float, float]:
    """(a(phi), transit time) of a turn by Clairaut quadrature on the unperturbed surface."""
    lm = _landmarks(surface)
    if name == "a2":
        c = lm.rho * math.sin(phi)
        l_start, toward_end = lm.l_beta, True
    elif name == "a4":
        c = -lm.rho * math.sin(phi)
        l_start, toward_end = lm.l_alpha, False
    else:
        raise ValueError(f"unknown transit {name!r}; expected 'a2' or 'a4'")
    dtheta, time, _ = surface.unperturbed().passage(c, l_start, toward_end)
    sign = 1.0 if c >= 0.0 else -1.0
    return math.pi + sign * (dtheta - math.pi), time


@observed("tabulate_transit")
def tabulate_transit(
    surface: ProfileSurface,
    name: str,
    phi_max: Optional[float] = None,
    n_nodes: int = DEFAULT_NODES,
) -> TransitFunction:
    """Tabulate a2 (cap) or a4 (region) on Chebyshev nodes over [-phi_max, phi_max].

    The default range is |phi| <= 1.2 for a2 and 0.95 * phi_0 for a4, where the
    region transit time diverges at phi_0.
    """
    if phi_max is None:
        phi_max = A2_PHI_MAX if name == "a2" else A4_PHI_FRACTION * separatrix_phi(surface)
    nodes = chebyshev_nodes(n_nodes, phi_max)
    rows = [turn_advance(surface, name, float(phi)) for phi in nodes]
    logger.info(f"tabulated {name} on {n_nodes} nodes, |phi| <= {phi_max:.4f}")
    return TransitFunction(name, phi_max, nodes, np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))


def psi_turn(transit: TransitFunction, pt: SectionPoint) -> SectionPoint:
    """(theta + a(phi), -phi) from S2 to S3 (a2) or from S4 to S1 (a4)."""
    if pt.section != transit.section_in:
        raise ValueError(f"{transit.name} starts on {transit.section_in}, got {pt.section}")
    return SectionPoint(pt.theta + transit(pt.phi), -pt.phi, _NEXT[pt.section])


# ==========================================================================
# Numerically integrated transits
# ==========================================================================


def _default_cap(surface: ProfileSurface, pt: SectionPoint) -> float:
    if pt.section in ("S1", "S3"):
        lm = _landmarks(surface)
        return 4.0 * lm.d / max(math.cos(pt.phi), 0.05) + 10.0
    return REGION_TIME_CAP


@dataclass(frozen=True)
class Transit:
    """Result of an integrated transit to the next section."""

    start: SectionPoint
    end: SectionPoint
    time: float


def numeric_transit(
    surface: ProfileSurface,
    pt: SectionPoint,
    tol: Optional[FlowTolerance] = None,
    time_cap: Optional[float] = None,
) -> Transit:
    """Integrate the flow from ``pt`` to the next section crossing.

    Raises:
        EscapeError: No crossing of the next section within ``time_cap``
    """
    target = _NEXT[pt.section]
    level, _ = _LAYOUT[target]
    cap = time_cap if time_cap is not None else _default_cap(surface, pt)
    traj = integrate_geodesic(surface, pt.state(surface), cap, tol, stop=StopCondition(level, target))
    if traj.stopped_by is None:
        raise EscapeError(target, cap, details={"from": pt.to_dict()})
    end = traj.end
    return Transit(pt, SectionPoint(end.theta, end.phi, target), traj.duration)


@observed("numeric_section_map")
def numeric_section_map(
    surface: ProfileSurface,
    pt: SectionPoint,
    tol: Optional[FlowTolerance] = None,
    time_cap: Optional[float] = None,
) -> SectionPoint:
    """Perturbed region transit S4 -> S1 by integrating the flow."""
    if pt.section != "S4":
        raise ValueError(f"numeric section map starts on S4, got {pt.section}")
    return numeric_transit(surface, pt, tol, time_cap).end


class SurrogateTurn:
    """Tabulated perturbed region transit S4 -> S1.

    The displacement from the unperturbed turn (theta + a4(phi), -phi) is
    integrated only where the unperturbed orbit passes through the bump box,
    zero elsewhere, and interpolated by a bicubic spline over theta x phi.
    """

    def __init__(
        self,
        surface: ProfileSurface,
        a4: TransitFunction,
        phi_max: float,
        n_theta: int = 256,
        n_phi: int = 17,
        tol: Optional[FlowTolerance] = None,
        time_cap: float = REGION_TIME_CAP,
    ):
        if phi_max > a4.phi_max:
            raise SectionDomainError("surrogate", phi_max, a4.phi_max)
        self.surface = surface
        self.a4 = a4
        self.phi_max = phi_max
        self.thetas = TWO_PI * np.arange(n_theta) / n_theta
        self.phis = np.linspace(-phi_max, phi_max, n_phi)
        self.tol = tol
        self.time_cap = time_cap
        d_theta = np.zeros((n_theta, n_phi))
        d_phi = np.zeros((n_theta, n_phi))
        self.integrations = 0
        if surface.is_perturbed:
            for j, phi in enumerate(self.phis):
                for i in np.nonzero(self._hit_mask(float(phi)))[0]:
                    end = numeric_section_map(surface, SectionPoint(float(self.thetas[i]), float(phi), "S4"), tol, time_cap)
                    d_theta[i, j] = end.theta - (self.thetas[i] + a4(float(phi)))
                    d_phi[i, j] = end.phi + phi
                    self.integrations += 1
        pad = 3
        theta_ext = np.concatenate([self.thetas[-pad:] - TWO_PI, self.thetas, self.thetas[:pad] + TWO_PI])
        self._d_theta = RectBivariateSpline(theta_ext, self.phis, np.vstack([d_theta[-pad:], d_theta, d_theta[:pad]]))
        self._d_phi = RectBivariateSpline(theta_ext, self.phis, np.vstack([d_phi[-pad:], d_phi, d_phi[:pad]]))
        logger.info(f"surrogate turn: {self.integrations} integrations on a {n_theta}x{n_phi} grid")

    def _hit_mask(self, phi: float) -> np.ndarray:
        """Grid thetas whose unperturbed orbit meets the bump box (dilated by one node)."""
        bump = self.surface.bump
        base = self.surface.unperturbed()
        start = SectionPoint(0.0, phi, "S4").state(base)
        traj = integrate_geodesic(base, start, self.time_cap, self.tol,
                                  stop=StopCondition("alpha", "S1"), record_levels=True)
        ts = np.arange(0.0, traj.duration, 0.01)
        smp = traj.sample(ts)
        lo, hi = bump.box_l_extent()
        inside = (smp.l > lo - 0.05) & (smp.l < hi + 0.05)
        mask = np.zeros(len(self.thetas), dtype=bool)
        for theta_rel, l in zip(smp.theta[inside], smp.l[inside]):
            for i, theta0 in enumerate(self.thetas):
                if mask[i]:
                    continue
                t, x = bump.to_chart(theta0 + theta_rel, l)
                if bump.box_indicator(t, x) < 0.1:
                    mask[i] = True
        return mask | np.roll(mask, 1) | np.roll(mask, -1)

    def displacement(self, theta: float, phi: float) -> Tuple[float, float]:
        t = wrap_positive(theta)
        return float(self._d_theta.ev(t, phi)), float(self._d_phi.ev(t, phi))

    def __call__(self, pt: SectionPoint) -> SectionPoint:
        if pt.section != "S4":
            raise ValueError(f"surrogate turn starts on S4, got {pt.section}")
        if abs(pt.phi) > self.phi_max:
            raise SectionDomainError("surrogate", pt.phi, self.phi_max)
        dt, dp = self.displacement(pt.theta, pt.phi)
        return SectionPoint(pt.theta + self.a4(pt.phi) + dt, -pt.phi + dp, "S1")


# ==========================================================================
# Return maps
# ==========================================================================


class ReturnMap:
    """First return to S1 (or to S4) through cylinder, cap, cylinder and region.

    ``turn`` replaces the region transit S4 -> S1; by default it is the
    unperturbed psi_turn(a4, .).
    """

    def __init__(
        self,
        surface: ProfileSurface,
        a2: TransitFunction,
        a4: TransitFunction,
        turn: Optional[Callable[[SectionPoint], SectionPoint]] = None,
    ):
        lm = _landmarks(surface)
        self.surface = surface
        self.d = lm.d
        self.rho = lm.rho
        self.a2 = a2
        self.a4 = a4
        self.turn = turn or (lambda pt: psi_turn(a4, pt))

    def _outer(self, pt: SectionPoint) -> SectionPoint:
        # S1 -> S2 -> S3 -> S4
        p2 = psi_cylinder(self.d, self.rho, pt)
        p3 = psi_turn(self.a2, p2)
        return psi_cylinder(self.d, self.rho, p3)

    def from_s1(self, pt: SectionPoint) -> SectionPoint:
        return self.turn(self._outer(pt))

    def from_s4(self, pt: SectionPoint) -> SectionPoint:
        return self._outer(self.turn(pt))

    def as_map(self, section: str = "S1") -> MapFn:
        """The return map as a plain function (theta, phi) -> (theta', phi')."""
        step = self.from_s1 if section == "S1" else self.from_s4

        def fn(theta: float, phi: float) -> Tuple[float, float]:
            out = step(SectionPoint(theta, phi, section))
            return out.theta, out.phi

        return fn


@observed("compose_return")
def compose_return(
    surface: ProfileSurface,
    pt: SectionPoint,
    a2: TransitFunction,
    a4: TransitFunction,
    turn: Optional[Callable[[SectionPoint], SectionPoint]] = None,
) -> SectionPoint:
    """Return map S1 -> S1: the region transit after psi_cylinder, psi_turn(a2), psi_cylinder."""
    if pt.section != "S1":
        raise ValueError(f"return map starts on S1, got {pt.section}")
    return ReturnMap(surface, a2, a4, turn).from_s1(pt)


def area_jacobian(fn: MapFn, theta: float, phi: float, h: float = 1e-6) -> float:
    """Determinant of D fn in (theta, sin phi) coordinates by central differences."""
    s = math.sin(phi)

    def lifted(t: float, u: float) -> np.ndarray:
        out_t, out_p = fn(t, math.asin(u))
        return np.array([out_t, math.sin(out_p)])

    col_t = (lifted(theta + h, s) - lifted(theta - h, s)) / (2.0 * h)
    col_s = (lifted(theta, s + h) - lifted(theta, s - h)) / (2.0 * h)
    return float(col_t[0] * col_s[1] - col_t[1] * col_s[0])


# ==========================================================================
# Scaling limit
# ==========================================================================


def scaled_map(fn: MapFn, d: float, theta: float, big_phi: float) -> Tuple[float, float]:
    """k_d(theta, Phi) = phi_d o fn o phi_d^-1 with phi_d(theta, phi) = (theta, d phi), |Phi| <= 1."""
    if abs(big_phi) > 1.0:
        raise SectionDomainError("k_d", big_phi, 1.0)
    out_t, out_p = fn(theta, big_phi / d)
    return out_t, d * out_p


def limit_map(rho: float, theta: float, big_phi: float) -> Tuple[float, float]:
    """k_inf(theta, Phi) = (theta + 2 Phi / rho, Phi)."""
    return theta + 2.0 * big_phi / rho, big_phi


@observed("scaling_distance")
def scaling_distance(fn: MapFn, d: float, rho: float, n_grid: int = 64) -> float:
    """Sup over an n x n grid of |k_d - k_inf| (theta mod 2*pi, plus the Phi difference)."""
    worst = 0.0
    for theta in TWO_PI * np.arange(n_grid) / n_grid:
        for big_phi in np.linspace(-1.0, 1.0, n_grid):
            kt, kp = scaled_map(fn, d, float(theta), float(big_phi))
            lt, lp = limit_map(rho, float(theta), float(big_phi))
            worst = max(worst, abs(wrap_angle(kt - lt)) + abs(kp - lp))
    return worst


# ==========================================================================
# Invariant-circle witnesses
# ==========================================================================


@dataclass(frozen=True)
class OrbitRecord:
    """One seeded orbit of a return map."""

    seed_theta: float
    seed_phi: float
    phi_min: float
    phi_max: float
    iterates: int
    escaped: bool
    rotation: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": [self.seed_theta, self.seed_phi],
            "phi_range": [self.phi_min, self.phi_max],
            "iterates": self.iterates,
            "escaped": self.escaped,
            "rotation": self.rotation,
        }


@dataclass
class CircleWitness:
    """Numerical evidence for an invariant circle in |phi| <= 1/d."""

    section: str
    d: float
    n_iter: int
    orbits: List[OrbitRecord]
    verdict: str
    band: Optional[Tuple[float, float]] = None
    envelope: Optional[Tuple[float, float]] = None
    rotation_numbers: Tuple[float, ...] = ()

    @property
    def confined(self) -> bool:
        return self.verdict == "confined"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "section": self.section,
            "d": self.d,
            "N": self.n_iter,
            "verdict": self.verdict,
            "band": list(self.band) if self.band else None,
            "envelope": list(self.envelope) if self.envelope else None,
            "rotation_numbers": list(self.rotation_numbers),
            "orbits": len(self.orbits),
        }


def iterate_orbit(fn: MapFn, theta: float, phi: float, n: int) -> List[Tuple[int, float, float]]:
    """(iterate, theta, phi) rows of an orbit, for export."""
    rows = [(0, theta, phi)]
    for k in range(1, n + 1):
        theta, phi = fn(theta, phi)
        rows.append((k, theta, phi))
    return rows


def _run_orbit(fn: MapFn, theta: float, phi: float, limit: float, n_iter: int) -> OrbitRecord:
    seed_theta, seed_phi = theta, phi
    lo = hi = phi
    escaped = False
    done = 0
    for _ in range(n_iter):
        try:
            new_theta, new_phi = fn(theta, phi)
        except (SectionDomainError, EscapeError):
            escaped = True
            break
        done += 1
        theta, phi = new_theta, new_phi
        lo, hi = min(lo, phi), max(hi, phi)
        if abs(phi) > limit:
            escaped = True
            break
    # each return contains two turns of about pi each
    rotation = (theta - seed_theta - TWO_PI * done) / (TWO_PI * done) if done else 0.0
    return OrbitRecord(seed_theta, seed_phi, lo, hi, done, escaped, rotation)


@observed("detect_invariant_circle")
def detect_invariant_circle(
    fn: MapFn,
    d: float,
    n_iter: int = 10000,
    n_seeds: int = 12,
    theta_seeds: Sequence[float] = (0.0, math.pi),
    section: str = "S1",
    side: int = 1,
) -> CircleWitness:
    """Certify a circle in |phi| <= 1/d by orbit confinement and an order barrier.

    Orbits are seeded at phi = side * j / ((n_seeds + 1) d), j = 1..n_seeds. A
    confined orbit is a barrier when every orbit seeded closer to phi = 0 never
    rises above its top and every orbit seeded farther out never drops below
    its bottom. The witness band is the range of the outermost barrier.
    """
    limit = 1.0 / d
    levels = [side * j * limit / (n_seeds + 1) for j in range(1, n_seeds + 1)]
    orbits = [_run_orbit(fn, float(t), float(phi), limit, n_iter) for phi in levels for t in theta_seeds]

    def signed(o: OrbitRecord) -> Tuple[float, float, float]:
        lo, hi = sorted((side * o.phi_min, side * o.phi_max))
        return side * o.seed_phi, lo, hi

    barriers = []
    for o in orbits:
        if o.escaped:
            continue
        seed, lo, hi = signed(o)
        inner_ok = all(signed(i)[2] <= hi for i in orbits if signed(i)[0] < seed)
        outer_ok = all(signed(i)[1] >= lo for i in orbits if signed(i)[0] > seed and not i.escaped)
        if inner_ok and outer_ok:
            barriers.append(o)
    if not barriers:
        logger.info(f"no barrier among {len(orbits)} orbits at d={d} on {section}")
        return CircleWitness(section, d, n_iter, orbits, "escaped")

    outer = max(barriers, key=lambda o: signed(o)[0])
    _, lo, hi = signed(outer)
    inside = [o for o in orbits if not o.escaped and signed(o)[0] <= signed(outer)[0]]
    env_lo = min(signed(o)[1] for o in inside)
    env_hi = max(signed(o)[2] for o in inside)
    inner_neighbours = [o for o in inside if signed(o)[0] < signed(outer)[0]]
    rotations = [outer.rotation]
    if inner_neighbours:
        rotations.insert(0, max(inner_neighbours, key=lambda o: signed(o)[0]).rotation)
    witness = CircleWitness(section, d, n_iter, orbits, "confined", (lo, hi), (env_lo, env_hi), tuple(rotations))
    logger.info(f"circle witness on {section} at d={d}: band=[{lo:.6g}, {hi:.6g}] after {n_iter} iterates")
    return witness


def _crossing_phis(surface: ProfileSurface, v: GeodesicState, T: float,
                   tol: Optional[FlowTolerance]) -> List[float]:
    traj = integrate_geodesic(surface, v, T, tol, record_levels=True)
    return [abs(e.state.phi) for e in traj.section_events() if e.section == "S1"]


@observed("classify_side")
def classify_side(
    surface: ProfileSurface,
    witnesses: Sequence[CircleWitness],
    v: GeodesicState,
    T: float = 200.0,
    margin: float = 1e-3,
    tol: Optional[FlowTolerance] = None,
) -> str:
    """Place v in W1 (between the certified circles), W2 (outside) or 'unknown'.

    Uses |phi| of the S1 crossings of v over [0, T]; without crossings the
    Clairaut value stands in through arcsin(|c| / rho).
    """
    confined = [w for w in witnesses if w.confined]
    if not confined:
        raise ValueError("classify_side needs at least one confined witness")
    inner = min(min(abs(b) for b in w.band) for w in confined)
    outer = max(max(abs(b) for b in w.band) for w in confined)
    phis = _crossing_phis(surface, v, T, tol)
    if not phis:
        lm = _landmarks(surface)
        c = surface.clairaut(v)
        phis = [math.asin(min(abs(c) / lm.rho, 1.0))]
    if max(phis) < inner - margin:
        return "W1"
    if min(phis) > outer + margin:
        return "W2"
    return "unknown"


# ==========================================================================
# Measured constants
# ==========================================================================


def _region_time(surface: ProfileSurface, theta: float, phi: float, cap: float,
                 tol: Optional[FlowTolerance]) -> float:
    try:
        return numeric_transit(surface, SectionPoint(theta, phi, "S4"), tol, cap).time
    except EscapeError:
        return math.inf


@observed("measure_phi0")
def measure_phi0(
    surface: ProfileSurface,
    time_cap: Optional[float] = None,
    t0: Optional[float] = None,
    n_theta: int = 4,
    tol: Optional[FlowTolerance] = None,
    step: float = 0.02,
    xtol: float = 1e-4,
) -> float:
    """Largest phi such that region transits from S4 with |phi'| <= phi exit within the time cap.

    The cap defaults to ``10 * t0``; without ``t0`` the sojourn is measured over
    the band |phi| <= 1/d. Scans phi upward in ``step`` and bisects the first
    failing bracket.
    """
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    if time_cap is None:
        if t0 is None:
            t0 = measure_sojourn(surface, 1.0 / _landmarks(surface).d, tol=tol).t0
        time_cap = 10.0 * t0

    def exits(phi: float) -> bool:
        return all(_region_time(surface, float(t), s * phi, time_cap, tol) <= time_cap
                   for t in thetas for s in (1.0, -1.0))

    lo = 0.0
    hi = lo + step
    while hi < 0.5 * math.pi - step and exits(hi):
        lo, hi = hi, hi + step
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if exits(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"measured phi_0 = {lo:.6f} with time cap {time_cap:.3f}")
    return lo


@dataclass(frozen=True)
class SojournEstimate:
    """Largest time spent in R^ or D per visit over a grid of section points."""

    t0: float
    phi_max: float
    rows: Tuple[Dict[str, float], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"t0": self.t0, "phi_max": self.phi_max, "samples": len(self.rows)}


@observed("measure_sojourn")
def measure_sojourn(
    surface: ProfileSurface,
    phi_max: float,
    n_phi: int = 9,
    n_theta: int = 4,
    tol: Optional[FlowTolerance] = None,
) -> SojournEstimate:
    """t0: max over the grid of the integrated S2 -> S3 and S4 -> S1 transit times."""
    rows = []
    for phi in np.linspace(-phi_max, phi_max, n_phi):
        for theta in TWO_PI * np.arange(n_theta) / n_theta:
            cap_time = numeric_transit(surface, SectionPoint(float(theta), float(phi), "S2"), tol).time
            region_time = numeric_transit(surface, SectionPoint(float(theta), float(phi), "S4"), tol).time
            rows.append({"theta": float(theta), "phi": float(phi), "cap": cap_time, "region": region_time})
    t0 = max(max(r["cap"], r["region"]) for r in rows)
    logger.info(f"measured t0 = {t0:.6f} over {len(rows)} samples, |phi| <= {phi_max:.4g}")
    return SojournEstimate(t0, phi_max, tuple(rows))


@observed("measure_d0")
def measure_d0(
    build_map: Callable[[float], MapFn],
    d_values: Sequence[float],
    n_iter: int = 10000,
    n_seeds: int = 12,
) -> Tuple[Optional[float], List[CircleWitness]]:
    """Smallest d of a (doubling) sweep whose return map has a confined witness."""
    witnesses = []
    for d in d_values:
        witness = detect_invariant_circle(build_map(d), d, n_iter, n_seeds)
        witnesses.append(witness)
        if witness.confined:
            return d, witnesses
    return None, witnesses


__all__ = [
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
]
