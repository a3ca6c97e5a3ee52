"""Surfaces of revolution defined by a radius profile r(l).

Dumbbell profiles are C^2 piecewise quintics through knots with prescribed
(r, r', r''). Between knots with vanishing first and second derivatives a piece
is exactly the quintic smoothstep, so the flat band and the connecting cylinder
are constant to machine precision.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly, PPoly
from scipy.optimize import brentq

from geodesic_lab_core.decorators import observed
from geodesic_lab_core.exceptions import (
    BumpConfigurationError,
    ChartError,
    DomainError,
    SurfaceConstructionError,
)
from geodesic_lab_geometry.bump import PerturbationBump
from geodesic_lab_geometry.states import GeodesicState, wrap_angle

logger = logging.getLogger(__name__)

# Geodesic distance from a pole inside which the polar chart is used
POLE_RADIUS = 1e-2
_DOMAIN_SLACK = 1e-12
# below this Clairaut value a passage is treated as running through the pole
_MERIDIAN_CLAIRAUT = 1e-10


# ==========================================================================
# Profiles
# ==========================================================================


class Profile:
    """Radius profile l -> r(l) on [0, length]."""

    name: str = "profile"
    length: float = 0.0

    def evaluate(self, l: float) -> Tuple[float, float, float]:
        """(r, r', r'') at l."""
        raise NotImplementedError

    def radius_array(self, ls: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def third_derivative(self, l: float) -> float:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def cumulative_area(self, ls: np.ndarray) -> np.ndarray:
        """2*pi * integral_0^l r, vectorized."""
        raise NotImplementedError

    def breakpoints(self) -> List[float]:
        return [0.0, self.length]


class RoundSphereProfile(Profile):
    """Unit round sphere, r(l) = sin l on [0, pi]."""

    name = "round-sphere"

    def __init__(self) -> None:
        self.length = math.pi

    def evaluate(self, l: float) -> Tuple[float, float, float]:
        s = math.sin(l)
        return s, math.cos(l), -s

    def radius_array(self, ls: np.ndarray) -> np.ndarray:
        return np.sin(ls)

    def third_derivative(self, l: float) -> float:
        return -math.cos(l)

    def area(self) -> float:
        return 4.0 * math.pi

    def cumulative_area(self, ls: np.ndarray) -> np.ndarray:
        return 2.0 * math.pi * (1.0 - np.cos(ls))


class PiecewiseProfile(Profile):
    """C^2 piecewise-quintic profile through (l, [r, r', r'']) knots."""

    def __init__(self, knots: Sequence[Tuple[float, Sequence[float]]], name: str = "piecewise") -> None:
        xs = [float(k[0]) for k in knots]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise SurfaceConstructionError("knot_order", f"knot positions not increasing: {xs}")
        ys = [list(map(float, k[1])) for k in knots]
        self.name = name
        self.knots = [(x, tuple(y)) for x, y in zip(xs, ys)]
        self._ppoly = PPoly.from_bernstein_basis(BPoly.from_derivatives(xs, ys))
        self._d3 = self._ppoly.derivative(3)
        self._anti = self._ppoly.antiderivative()
        self._x = [float(v) for v in self._ppoly.x]
        self._c = [list(map(float, self._ppoly.c[:, i])) for i in range(self._ppoly.c.shape[1])]
        self.length = xs[-1]

    def evaluate(self, l: float) -> Tuple[float, float, float]:
        i = bisect.bisect_right(self._x, l) - 1
        if i < 0:
            i = 0
        elif i >= len(self._c):
            i = len(self._c) - 1
        dx = l - self._x[i]
        p = dp = ddp = 0.0
        for coef in self._c[i]:
            ddp = ddp * dx + 2.0 * dp
            dp = dp * dx + p
            p = p * dx + coef
        return p, dp, ddp

    def evaluate_piece(self, piece: int, l: float) -> Tuple[float, float, float]:
        """Evaluate one polynomial piece (used for one-sided continuity checks)."""
        dx = l - self._x[piece]
        p = dp = ddp = 0.0
        for coef in self._c[piece]:
            ddp = ddp * dx + 2.0 * dp
            dp = dp * dx + p
            p = p * dx + coef
        return p, dp, ddp

    def radius_array(self, ls: np.ndarray) -> np.ndarray:
        return self._ppoly(np.asarray(ls, dtype=float))

    def third_derivative(self, l: float) -> float:
        return float(self._d3(l))

    def area(self) -> float:
        return 2.0 * math.pi * float(self._anti(self.length) - self._anti(0.0))

    def cumulative_area(self, ls: np.ndarray) -> np.ndarray:
        return 2.0 * math.pi * (self._anti(np.asarray(ls, dtype=float)) - self._anti(0.0))

    def breakpoints(self) -> List[float]:
        return list(self._x)


# ==========================================================================
# Dumbbell parameters
# ==========================================================================


@dataclass(frozen=True)
class RegionParams:
    """Geometry of the region R^ (pole Q, bulb, neck, flat band, fall to alpha)."""

    bulb_radius: float = 0.9
    bulb_position: float = 0.9
    bulb_curvature: Optional[float] = None
    neck_radius: float = 0.6
    neck_curvature: float = 0.5
    band_radius: float = 1.0
    band_half_width: float = 0.5
    rho: float = 0.8
    piece_length: float = 1.0

    def resolved_bulb_curvature(self) -> float:
        return self.bulb_curvature if self.bulb_curvature is not None else 1.0 / self.bulb_radius


@dataclass(frozen=True)
class CapParams:
    """Cap D closing the cylinder at pole P; ``length`` defaults to rho."""

    length: Optional[float] = None


@dataclass(frozen=True)
class DumbbellLandmarks:
    """Marked latitudes and radii of a dumbbell surface."""

    l_bulb: float
    l0: float
    l1: float
    b: float
    l_alpha: float
    l_beta: float
    r_bulb: float
    r0: float
    r1: float
    rho: float
    d: float

    @property
    def band(self) -> Tuple[float, float]:
        return self.l1 - self.b, self.l1 + self.b

    def to_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class InvariantOutcome:
    """Result of one machine-checked surface invariant."""

    name: str
    passed: bool
    message: str
    details: Dict[str, Any] = field(default_factory=dict)


# ==========================================================================
# Surface
# ==========================================================================


@dataclass(frozen=True)
class ProfileSurface:
    """Surface of revolution, optionally carrying a perturbation bump on its flat band."""

    profile: Profile
    landmarks: Optional[DumbbellLandmarks] = None
    bump: Optional[PerturbationBump] = None
    name: str = "surface"

    @property
    def length(self) -> float:
        return self.profile.length

    @property
    def is_dumbbell(self) -> bool:
        return self.landmarks is not None

    @property
    def is_perturbed(self) -> bool:
        return self.bump is not None and self.bump.amplitude != 0.0

    def with_bump(self, bump: Optional[PerturbationBump]) -> "ProfileSurface":
        """Copy of this surface carrying ``bump`` (None removes it)."""
        if bump is None:
            return replace(self, bump=None)
        if self.landmarks is None:
            raise BumpConfigurationError("bumps are only supported on dumbbell surfaces")
        if bump.anchor is None:
            raise BumpConfigurationError("bump must be anchored before it is attached to a surface")
        lm = self.landmarks
        lo, hi = bump.box_l_extent()
        band_lo, band_hi = lm.band
        if lo <= band_lo or hi >= band_hi:
            raise BumpConfigurationError(
                "bump chart box leaves the flat band",
                details={"box": [lo, hi], "band": [band_lo, band_hi]},
            )
        if abs(bump.anchor.band_radius - lm.r1) > 1e-12:
            raise BumpConfigurationError("anchor band radius differs from the flat band radius")
        return replace(self, bump=bump)

    def unperturbed(self) -> "ProfileSurface":
        return replace(self, bump=None)

    # ------------------------------------------------------------------
    # Profile queries
    # ------------------------------------------------------------------

    def _check_domain(self, l: float) -> float:
        if l < -_DOMAIN_SLACK or l > self.length + _DOMAIN_SLACK or math.isnan(l):
            raise DomainError(l=l, length=self.length)
        return min(max(l, 0.0), self.length)

    def profile_eval(self, l: float) -> float:
        """r(l)."""
        return self.profile.evaluate(self._check_domain(l))[0]

    def derivatives(self, l: float) -> Tuple[float, float, float]:
        """(r, r', r'') at l."""
        return self.profile.evaluate(self._check_domain(l))

    def pole_curvature(self, at_end: bool = False) -> float:
        """Continuous extension of K at pole Q (or pole P when ``at_end``)."""
        l = self.length if at_end else 0.0
        _, dr, _ = self.profile.evaluate(l)
        return -self.profile.third_derivative(l) / dr

    def gaussian_curvature(self, l: float) -> float:
        """K(l) = -r''(l) / r(l), extended continuously to the poles."""
        l = self._check_domain(l)
        r, _, ddr = self.profile.evaluate(l)
        if r < 1e-9:
            return self.pole_curvature(at_end=l > 0.5 * self.length)
        return -ddr / r

    def curvature_at(self, theta: float, l: float) -> float:
        """Curvature including the bump when (theta, l) lies in its chart box."""
        if self.is_perturbed:
            t, x = self.bump.to_chart(theta, l)
            if self.bump.box_indicator(t, x) < 0.0:
                return self.bump.curvature(t, x)
        return self.gaussian_curvature(l)

    def clairaut(self, state: GeodesicState) -> float:
        """Clairaut value heading * r(l) * sin(phi)."""
        r = self.profile_eval(state.l)
        if r <= 0.0:
            raise ChartError("clairaut value undefined at a pole", details={"l": state.l})
        return state.heading * r * math.sin(state.phi)

    def area(self) -> float:
        return self.profile.area()

    def sup_abs_curvature(self, n: int = 4001) -> float:
        """sup |K| over R^ and D (the whole surface when not a dumbbell), bump included."""
        if self.landmarks is None:
            ls = np.linspace(0.0, self.length, n)
        else:
            lm = self.landmarks
            ls = np.concatenate([np.linspace(0.0, lm.l_alpha, n), np.linspace(lm.l_beta, self.length, n // 4)])
        sup = max(abs(self.gaussian_curvature(float(l))) for l in ls)
        if self.is_perturbed:
            sup = max(sup, self.bump.sup_abs_curvature())
        return sup

    def sample_table(self, n: int = 1001) -> Dict[str, np.ndarray]:
        """Sampled (l, r, r', r'', K) columns."""
        ls = np.linspace(0.0, self.length, n)
        rows = [self.profile.evaluate(float(l)) for l in ls]
        return {
            "l": ls,
            "r": np.array([row[0] for row in rows]),
            "dr": np.array([row[1] for row in rows]),
            "ddr": np.array([row[2] for row in rows]),
            "K": np.array([self.gaussian_curvature(float(l)) for l in ls]),
        }

    def chart_distance(self, theta1, l1, theta2, l2) -> np.ndarray:
        """Approximate distance between nearby points (vectorized).

        Uses the polar chart within 0.2 of a pole, otherwise the local
        metric dl^2 + r(l_mid)^2 dtheta^2.
        """
        theta1, l1, theta2, l2 = (np.asarray(v, dtype=float) for v in (theta1, l1, theta2, l2))
        dtheta = np.mod(theta2 - theta1 + math.pi, 2.0 * math.pi) - math.pi
        mid = np.clip(0.5 * (l1 + l2), 0.0, self.length)
        local = np.hypot(l2 - l1, self.profile.radius_array(mid) * dtheta)
        polar = 0.2
        near_q = (l1 < polar) & (l2 < polar)
        near_p = (l1 > self.length - polar) & (l2 > self.length - polar)
        if np.any(near_q | near_p):
            a1 = np.where(near_q, l1, self.length - l1)
            a2 = np.where(near_q, l2, self.length - l2)
            cart = np.hypot(a2 * np.cos(theta2) - a1 * np.cos(theta1), a2 * np.sin(theta2) - a1 * np.sin(theta1))
            local = np.where(near_q | near_p, cart, local)
        return local

    # ------------------------------------------------------------------
    # Clairaut quadrature
    # ------------------------------------------------------------------

    def turning_point(self, c: float, l_start: float, toward_end: bool) -> float:
        """First l from ``l_start`` toward a pole where r(l) = |c| (the pole itself for c = 0)."""
        c = abs(c)
        pole = self.length if toward_end else 0.0
        if c == 0.0:
            return pole
        grid = np.linspace(l_start, pole, 2049)
        radii = self.profile.radius_array(grid)
        below = np.nonzero(radii <= c)[0]
        if below.size == 0:
            return pole
        k = int(below[0])
        if k == 0:
            return l_start
        return brentq(lambda l: self.profile.evaluate(l)[0] - c, float(grid[k - 1]), float(grid[k]), xtol=1e-15)

    def passage(self, c: float, l_start: float, toward_end: bool) -> Tuple[float, float, float]:
        """Round trip from ``l_start`` toward a pole and back, by Clairaut quadrature.

        Returns (|delta theta|, elapsed time, turning point). For c = 0 the
        geodesic runs through the pole and delta theta is pi.
        """
        if abs(c) < _MERIDIAN_CLAIRAUT:
            c = 0.0
        l_turn = self.turning_point(c, l_start, toward_end)
        span = abs(l_start - l_turn)
        if c == 0.0:
            return math.pi, 2.0 * span, l_turn
        if span == 0.0:
            return 0.0, 0.0, l_turn
        c = abs(c)
        direction = 1.0 if l_turn < l_start else -1.0
        evaluate = self.profile.evaluate

        def gap(l: float) -> float:
            r = evaluate(l)[0]
            return max(r * r - c * c, 0.0)

        # l = l_turn + direction * tau^2 removes the inverse square root at the turning point
        head = min(span, max(0.05 * span, 1e-3))
        tau_max = math.sqrt(head)

        def head_integrand(tau: float, want_angle: bool) -> float:
            l = l_turn + direction * tau * tau
            r = evaluate(l)[0]
            g = gap(l)
            if g <= 0.0:
                # tau -> 0 limit: r^2 - c^2 ~ 2 c |r'| tau^2
                _, dr, _ = evaluate(l_turn)
                root = math.sqrt(abs(2.0 * c * dr)) or 1e-300
                return 2.0 * (1.0 if want_angle else c) / root
            num = c / r if want_angle else r
            return 2.0 * tau * num / math.sqrt(g)

        def tail_integrand(l: float, want_angle: bool) -> float:
            r = evaluate(l)[0]
            g = gap(l)
            if g <= 0.0:
                return 0.0
            return (c / r if want_angle else r) / math.sqrt(g)

        lo, hi = sorted((l_turn + direction * head, l_start))
        inner = [p for p in self.profile.breakpoints() if lo < p < hi]
        kwargs = dict(limit=400, epsabs=1e-13, epsrel=1e-12)
        angle = quad(head_integrand, 0.0, tau_max, args=(True,), **kwargs)[0]
        time = quad(head_integrand, 0.0, tau_max, args=(False,), **kwargs)[0]
        if hi > lo:
            angle += quad(tail_integrand, lo, hi, args=(True,), points=inner or None, **kwargs)[0]
            time += quad(tail_integrand, lo, hi, args=(False,), points=inner or None, **kwargs)[0]
        return 2.0 * angle, 2.0 * time, l_turn

    # ------------------------------------------------------------------
    # Invariants
    # ------------------------------------------------------------------

    def check_invariants(self) -> List[InvariantOutcome]:
        """Machine-check the profile invariants."""
        outcomes = [self._check_poles(), self._check_positive()]
        if self.landmarks is not None:
            outcomes.extend(self._check_dumbbell())
        if isinstance(self.profile, PiecewiseProfile):
            outcomes.append(self._check_continuity())
        return outcomes

    def _check_poles(self) -> InvariantOutcome:
        r0, dr0, ddr0 = self.profile.evaluate(0.0)
        rR, drR, ddrR = self.profile.evaluate(self.length)
        values = {"r(0)": r0, "r'(0)": dr0, "r''(0)": ddr0, "r(R)": rR, "r'(R)": drR, "r''(R)": ddrR}
        ok = (abs(r0) < 1e-12 and abs(rR) < 1e-12 and abs(dr0 - 1.0) < 1e-12
              and abs(drR + 1.0) < 1e-12 and abs(ddr0) < 1e-10 and abs(ddrR) < 1e-10)
        return InvariantOutcome("smooth_poles", ok, "pole conditions r=0, |r'|=1, r''=0", values)

    def _check_positive(self) -> InvariantOutcome:
        ls = np.linspace(0.0, self.length, 20001)[1:-1]
        rmin = float(np.min(self.profile.radius_array(ls)))
        return InvariantOutcome("positive_interior", rmin > 0.0, "r > 0 on (0, R)", {"min_r": rmin})

    def _check_dumbbell(self) -> List[InvariantOutcome]:
        lm = self.landmarks
        ev = self.profile.evaluate
        out: List[InvariantOutcome] = []

        _, dr_neck, ddr_neck = ev(lm.l0)
        out.append(InvariantOutcome(
            "neck_nondegenerate",
            abs(dr_neck) < 1e-12 and ddr_neck > 0.0,
            "r'(l0) = 0 and r''(l0) > 0",
            {"dr": dr_neck, "ddr": ddr_neck, "K": self.gaussian_curvature(lm.l0)},
        ))

        band = np.linspace(*lm.band, 201)
        band_dev = float(np.max(np.abs(self.profile.radius_array(band) - lm.r1)))
        out.append(InvariantOutcome(
            "flat_band", band_dev < 1e-12 and lm.r1 > lm.r0,
            "r = r1 > r0 on the band", {"max_deviation": band_dev},
        ))

        cyl = np.linspace(lm.l_alpha, lm.l_beta, 201)
        cyl_dev = float(np.max(np.abs(self.profile.radius_array(cyl) - lm.rho)))
        out.append(InvariantOutcome("flat_cylinder", cyl_dev < 1e-12, "r = rho on the cylinder", {"max_deviation": cyl_dev}))

        def monotone(name: str, lo: float, hi: float, sign: float, message: str) -> InvariantOutcome:
            ls = np.linspace(lo, hi, 4001)[1:-1]
            worst = min(sign * ev(float(l))[1] for l in ls)
            return InvariantOutcome(name, worst > 0.0, message, {"min_signed_slope": worst})

        out.append(monotone("bulb_rise", 0.0, lm.l_bulb, 1.0, "r increasing on (0, l_bulb)"))
        out.append(monotone("bulb_fall", lm.l_bulb, lm.l0, -1.0, "r decreasing on (l_bulb, l0)"))
        out.append(monotone("neck_to_band", lm.l0, lm.band[0], 1.0, "r increasing on (l0, l1 - b)"))
        out.append(monotone("band_to_alpha", lm.band[1], lm.l_alpha, -1.0, "r decreasing on (l1 + b, l_alpha)"))
        out.append(monotone("cap_single_latitude", lm.l_beta, self.length, -1.0,
                            "r decreasing on the cap; beta is its only latitude geodesic"))
        out.append(InvariantOutcome(
            "alpha_below_band", lm.r0 < lm.rho < lm.r1,
            "r0 < rho < r1 so geodesics entering R^ exit except along the separatrix",
            {"r0": lm.r0, "rho": lm.rho, "r1": lm.r1},
        ))
        return out

    def _check_continuity(self) -> InvariantOutcome:
        profile = self.profile
        assert isinstance(profile, PiecewiseProfile)
        worst = 0.0
        for piece in range(1, len(profile._c)):
            knot = profile._x[piece]
            left = profile.evaluate_piece(piece - 1, knot)
            right = profile.evaluate_piece(piece, knot)
            worst = max(worst, max(abs(a - b) for a, b in zip(left, right)))
        # one-sided finite differences of r' and r'' across each knot
        h = 1e-5
        fd_worst = 0.0
        for knot in profile._x[1:-1]:
            rm, rk, rp = (profile.evaluate(knot + s)[0] for s in (-h, 0.0, h))
            left_slope = (rk - rm) / h
            right_slope = (rp - rk) / h
            fd_worst = max(fd_worst, abs(left_slope - right_slope))
        ok = worst < 1e-9 and fd_worst < 1e-3
        return InvariantOutcome("c2_continuity", ok, "r, r', r'' continuous at knots",
                                {"max_jump": worst, "max_fd_slope_jump": fd_worst})

    def describe(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "length": self.length, "area": self.area()}
        if self.landmarks is not None:
            data["landmarks"] = self.landmarks.to_dict()
            data["neck_curvature"] = self.gaussian_curvature(self.landmarks.l0)
        if self.bump is not None:
            data["bump"] = {
                "amplitude": self.bump.amplitude,
                "delta_t": self.bump.delta_t,
                "delta_x": self.bump.delta_x,
                "shear": self.bump.shear,
            }
            if self.bump.anchor is not None:
                an = self.bump.anchor
                data["bump"]["anchor"] = {"theta": an.theta, "l": an.l, "psi": an.psi}
        return data


# ==========================================================================
# Builders and module-level operations
# ==========================================================================


def build_round_sphere() -> ProfileSurface:
    """Unit round sphere, used as closed-form oracle."""
    return ProfileSurface(profile=RoundSphereProfile(), name="round-sphere")


@observed("build_dumbbell")
def build_dumbbell(
    region: Optional[RegionParams] = None,
    cap: Optional[CapParams] = None,
    d: float = 20.0,
    name: str = "dumbbell",
) -> ProfileSurface:
    """Build the dumbbell C_d: region R^, cylinder of length d, cap D.

    Raises:
        SurfaceConstructionError: naming the first failed invariant
    """
    region = region or RegionParams()
    cap = cap or CapParams()
    if not d > 0.0:
        raise SurfaceConstructionError("cylinder_length", f"d must be positive, got {d}")
    if not region.neck_radius < region.rho < region.band_radius:
        raise SurfaceConstructionError(
            "alpha_below_band", "need neck_radius < rho < band_radius",
            details={"r0": region.neck_radius, "rho": region.rho, "r1": region.band_radius},
        )
    if region.neck_radius >= region.bulb_radius:
        raise SurfaceConstructionError("neck_nondegenerate", "neck radius must be below the bulb radius")
    cap_length = cap.length if cap.length is not None else region.rho
    if cap_length <= 0.0:
        raise SurfaceConstructionError("cap_single_latitude", f"cap length must be positive, got {cap_length}")

    step = region.piece_length
    l_bulb = region.bulb_position
    l0 = l_bulb + step
    band_lo = l0 + step
    band_hi = band_lo + 2.0 * region.band_half_width
    l_alpha = band_hi + step
    l_beta = l_alpha + d
    total = l_beta + cap_length

    knots = [
        (0.0, (0.0, 1.0, 0.0)),
        (l_bulb, (region.bulb_radius, 0.0, -region.resolved_bulb_curvature())),
        (l0, (region.neck_radius, 0.0, region.neck_curvature)),
        (band_lo, (region.band_radius, 0.0, 0.0)),
        (band_hi, (region.band_radius, 0.0, 0.0)),
        (l_alpha, (region.rho, 0.0, 0.0)),
        (l_beta, (region.rho, 0.0, 0.0)),
        (total, (0.0, -1.0, 0.0)),
    ]
    landmarks = DumbbellLandmarks(
        l_bulb=l_bulb,
        l0=l0,
        l1=0.5 * (band_lo + band_hi),
        b=region.band_half_width,
        l_alpha=l_alpha,
        l_beta=l_beta,
        r_bulb=region.bulb_radius,
        r0=region.neck_radius,
        r1=region.band_radius,
        rho=region.rho,
        d=d,
    )
    surface = ProfileSurface(profile=PiecewiseProfile(knots, name=name), landmarks=landmarks, name=name)
    for outcome in surface.check_invariants():
        if not outcome.passed:
            raise SurfaceConstructionError(outcome.name, outcome.message, details=outcome.details)
    logger.info(f"Built {name}: d={d}, R={total:.4f}, K(l0)={surface.gaussian_curvature(l0):.4f}")
    return surface


def profile_eval(surface: ProfileSurface, l: float) -> float:
    return surface.profile_eval(l)


def gaussian_curvature(surface: ProfileSurface, l: float) -> float:
    return surface.gaussian_curvature(l)


def clairaut(surface: ProfileSurface, state: GeodesicState) -> float:
    return surface.clairaut(state)


__all__ = [
    "POLE_RADIUS",
    "Profile",
    "RoundSphereProfile",
    "PiecewiseProfile",
    "RegionParams",
    "CapParams",
    "DumbbellLandmarks",
    "InvariantOutcome",
    "ProfileSurface",
    "build_round_sphere",
    "build_dumbbell",
    "profile_eval",
    "gaussian_curvature",
    "clairaut",
]
