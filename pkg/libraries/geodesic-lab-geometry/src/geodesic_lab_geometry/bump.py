"""Local non-rotational perturbation of the flat band.

In bump coordinates (t, x) the metric is ``g = (1 - alpha(t, x) x^2, a, 1)``
with ``alpha = A * beta(t / delta_t) * beta(x / delta_x)`` and
``beta(s) = (1 - s^2)^4`` on |s| < 1. The t-axis (x = 0) and the x-lines
(meridians) stay geodesics for every amplitude.

When anchored on the flat band, the chart is laid over the developed band
coordinates ``u = r1 * (theta - theta_p)`` and ``l``:

    (u, l) = (t * e1u, l_p + t * e1l + sigma * x)

where ``e1 = (sin psi_p, cos psi_p)`` is the carrier direction at the anchor and
``sigma = sign(cos psi_p)``, so that ``a = |cos psi_p|``.
"""
from __future__ import annotations

import math
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from geodesic_lab_core.exceptions import BumpConfigurationError
from geodesic_lab_geometry.states import wrap_angle

logger = logging.getLogger(__name__)

# max of s^2 (1 - s^2)^4 on [0, 1], attained at s^2 = 1/5
_PEAK_X2_FACTOR = 0.2 * 0.8 ** 4


def bump_profile(s: float) -> Tuple[float, float, float]:
    """beta(s) = (1 - s^2)^4 on |s| < 1 with its first two derivatives."""
    if abs(s) >= 1.0:
        return 0.0, 0.0, 0.0
    q = 1.0 - s * s
    q2 = q * q
    q3 = q2 * q
    return q2 * q2, -8.0 * s * q3, -8.0 * q3 + 48.0 * s * s * q2


@dataclass(frozen=True)
class MetricCoefficients:
    """Metric entries in the (t, x) chart."""

    g11: float
    g12: float
    g22: float

    @property
    def determinant(self) -> float:
        return self.g11 * self.g22 - self.g12 * self.g12

    @property
    def positive_definite(self) -> bool:
        return self.g11 > 0.0 and self.determinant > 0.0

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.g11, self.g12, self.g22


@dataclass(frozen=True)
class ChristoffelSymbols:
    """Gamma^k_ij of the bump metric; ``g1_12`` is Gamma^1_12 and so on."""

    g1_11: float
    g1_12: float
    g1_22: float
    g2_11: float
    g2_12: float
    g2_22: float

    def max_abs(self) -> float:
        return max(abs(v) for v in (self.g1_11, self.g1_12, self.g1_22,
                                    self.g2_11, self.g2_12, self.g2_22))


@dataclass(frozen=True)
class BumpAnchor:
    """Placement of the bump center on a carrier geodesic in the flat band."""

    theta: float
    l: float
    psi: float
    band_radius: float

    @property
    def e1(self) -> Tuple[float, float]:
        return math.sin(self.psi), math.cos(self.psi)

    @property
    def sigma(self) -> float:
        return 1.0 if math.cos(self.psi) >= 0.0 else -1.0


@dataclass(frozen=True)
class PerturbationBump:
    """Compactly supported metric perturbation ``g^alpha`` on the flat band."""

    amplitude: float
    delta_t: float = 0.2
    delta_x: float = 0.1
    shear: float = 0.0
    anchor: Optional[BumpAnchor] = None
    box_factor: float = 1.2

    def __post_init__(self) -> None:
        if self.delta_t <= 0.0 or self.delta_x <= 0.0:
            raise BumpConfigurationError(
                "support half-widths must be positive",
                details={"delta_t": self.delta_t, "delta_x": self.delta_x},
            )
        if not -1.0 < self.shear < 1.0:
            raise BumpConfigurationError(f"shear a={self.shear} outside (-1, 1)")
        if self.box_factor < 1.0:
            raise BumpConfigurationError(f"box_factor={self.box_factor} must be >= 1")
        margin = 1.0 - self.shear ** 2 - self.peak_x2_alpha
        if margin <= 0.0:
            raise BumpConfigurationError(
                "positive-definiteness violated: 1 - alpha*x^2 - a^2 <= 0 on the support",
                details={"amplitude": self.amplitude, "shear": self.shear, "margin": margin},
            )
        if self.anchor is not None and abs(abs(math.cos(self.anchor.psi)) - self.shear) > 1e-9:
            raise BumpConfigurationError(
                "shear does not match the anchor direction",
                details={"shear": self.shear, "expected": abs(math.cos(self.anchor.psi))},
            )

    @classmethod
    def anchored(
        cls,
        amplitude: float,
        theta: float,
        l: float,
        psi: float,
        band_radius: float,
        delta_t: float = 0.2,
        delta_x: float = 0.1,
        box_factor: float = 1.2,
    ) -> "PerturbationBump":
        """Create a bump centered at (theta, l) along the direction ``psi``."""
        if abs(math.sin(psi)) < 1e-6:
            raise BumpConfigurationError("anchor direction is a meridian; the chart is degenerate")
        return cls(
            amplitude=amplitude,
            delta_t=delta_t,
            delta_x=delta_x,
            shear=abs(math.cos(psi)),
            anchor=BumpAnchor(theta=theta, l=l, psi=psi, band_radius=band_radius),
            box_factor=box_factor,
        )

    def with_amplitude(self, amplitude: float) -> "PerturbationBump":
        return replace(self, amplitude=amplitude)

    @property
    def peak_x2_alpha(self) -> float:
        """Maximum of alpha(t, x) * x^2 over the support (0 for A <= 0)."""
        return max(self.amplitude, 0.0) * self.delta_x ** 2 * _PEAK_X2_FACTOR

    @property
    def box_half_t(self) -> float:
        return self.box_factor * self.delta_t

    @property
    def box_half_x(self) -> float:
        return self.box_factor * self.delta_x

    # ------------------------------------------------------------------
    # Metric quantities
    # ------------------------------------------------------------------

    def alpha(self, t: float, x: float) -> float:
        return self.amplitude * bump_profile(t / self.delta_t)[0] * bump_profile(x / self.delta_x)[0]

    def _e_derivatives(self, t: float, x: float) -> Tuple[float, float, float, float]:
        """E = g11 and its derivatives E_t, E_x, E_xx."""
        bt, dbt, _ = bump_profile(t / self.delta_t)
        bx, dbx, ddbx = bump_profile(x / self.delta_x)
        if bt == 0.0 or bx == 0.0 or self.amplitude == 0.0:
            return 1.0, 0.0, 0.0, 0.0
        A = self.amplitude
        al = A * bt * bx
        al_t = A * dbt / self.delta_t * bx
        al_x = A * bt * dbx / self.delta_x
        al_xx = A * bt * ddbx / self.delta_x ** 2
        x2 = x * x
        E = 1.0 - al * x2
        E_t = -al_t * x2
        E_x = -(al_x * x2 + 2.0 * al * x)
        E_xx = -(al_xx * x2 + 4.0 * al_x * x + 2.0 * al)
        return E, E_t, E_x, E_xx

    def metric(self, t: float, x: float) -> MetricCoefficients:
        """Metric coefficients (1 - alpha x^2, a, 1)."""
        g = MetricCoefficients(1.0 - self.alpha(t, x) * x * x, self.shear, 1.0)
        if not g.positive_definite:
            raise BumpConfigurationError(
                "positive-definiteness violated", details={"t": t, "x": x, "g11": g.g11}
            )
        return g

    def christoffel(self, t: float, x: float) -> ChristoffelSymbols:
        """Closed-form Christoffel symbols; F = a and G = 1 are constant."""
        E, E_t, E_x, _ = self._e_derivatives(t, x)
        a = self.shear
        D = E - a * a
        return ChristoffelSymbols(
            g1_11=0.5 * (E_t + a * E_x) / D,
            g1_12=0.5 * E_x / D,
            g1_22=0.0,
            g2_11=-0.5 * (a * E_t + E * E_x) / D,
            g2_12=-0.5 * a * E_x / D,
            g2_22=0.0,
        )

    def curvature(self, t: float, x: float) -> float:
        """Gaussian curvature from the Brioschi formula with F, G constant."""
        E, _, E_x, E_xx = self._e_derivatives(t, x)
        D = E - self.shear ** 2
        return (-0.5 * E_xx * D + 0.25 * E_x * E_x) / (D * D)

    def curvature_on_axis(self, t: float) -> float:
        """K(t, 0) = alpha(t, 0) / (1 - a^2)."""
        return self.alpha(t, 0.0) / (1.0 - self.shear ** 2)

    def geodesic_rhs(self, t: float, x: float, vt: float, vx: float) -> Tuple[float, float, float]:
        """Accelerations (t'', x'') and the curvature at (t, x)."""
        E, E_t, E_x, E_xx = self._e_derivatives(t, x)
        if E_t == 0.0 and E_x == 0.0 and E_xx == 0.0:
            return 0.0, 0.0, 0.0
        a = self.shear
        D = E - a * a
        g1_11 = 0.5 * (E_t + a * E_x) / D
        g1_12 = 0.5 * E_x / D
        g2_11 = -0.5 * (a * E_t + E * E_x) / D
        g2_12 = -0.5 * a * E_x / D
        at = -(g1_11 * vt * vt + 2.0 * g1_12 * vt * vx)
        ax = -(g2_11 * vt * vt + 2.0 * g2_12 * vt * vx)
        K = (-0.5 * E_xx * D + 0.25 * E_x * E_x) / (D * D)
        return at, ax, K

    def sup_abs_curvature(self, n: int = 81) -> float:
        """max |K| over an n x n grid of the support."""
        ts = np.linspace(-self.delta_t, self.delta_t, n)
        xs = np.linspace(-self.delta_x, self.delta_x, n)
        return max(abs(self.curvature(float(t), float(x))) for t in ts for x in xs)

    # ------------------------------------------------------------------
    # Anchored chart
    # ------------------------------------------------------------------

    def _require_anchor(self) -> BumpAnchor:
        if self.anchor is None:
            raise BumpConfigurationError("bump has no anchor on the surface")
        return self.anchor

    def to_chart(self, theta: float, l: float) -> Tuple[float, float]:
        """Surface coordinates (theta, l) to bump coordinates (t, x)."""
        an = self._require_anchor()
        e1u, e1l = an.e1
        u = an.band_radius * wrap_angle(theta - an.theta)
        t = u / e1u
        x = an.sigma * (l - an.l - t * e1l)
        return t, x

    def from_chart(self, t: float, x: float) -> Tuple[float, float]:
        """Bump coordinates (t, x) to surface coordinates (theta, l)."""
        an = self._require_anchor()
        e1u, e1l = an.e1
        theta = an.theta + t * e1u / an.band_radius
        l = an.l + t * e1l + an.sigma * x
        return theta, l

    def velocity_to_chart(self, psi: float) -> Tuple[float, float]:
        """Unit velocity with band angle ``psi`` as (t', x'); valid off the support."""
        an = self._require_anchor()
        e1u, e1l = an.e1
        vt = math.sin(psi) / e1u
        vx = an.sigma * (math.cos(psi) - vt * e1l)
        return vt, vx

    def velocity_from_chart(self, vt: float, vx: float) -> float:
        """Band angle of the chart velocity (t', x')."""
        an = self._require_anchor()
        e1u, e1l = an.e1
        return math.atan2(vt * e1u, vt * e1l + an.sigma * vx)

    def box_indicator(self, t: float, x: float) -> float:
        """Negative inside the chart box, zero on its boundary."""
        return max(abs(t) / self.box_half_t, abs(x) / self.box_half_x) - 1.0

    def box_l_extent(self) -> Tuple[float, float]:
        """Range of l covered by the chart box."""
        an = self._require_anchor()
        reach = self.box_half_t * abs(an.e1[1]) + self.box_half_x
        return an.l - reach, an.l + reach


def brioschi_curvature_fd(metric_fn, u: float, v: float, h: float = 1e-3) -> float:
    """Gaussian curvature of a metric ``metric_fn(u, v) -> (E, F, G)`` by finite differences.

    Uses the Brioschi formula with central differences of step ``h``.
    """
    def coeffs(du: float, dv: float) -> Tuple[float, float, float]:
        return tuple(metric_fn(u + du, v + dv))  # type: ignore[return-value]

    E, F, G = coeffs(0.0, 0.0)
    Ep, Fp, Gp = coeffs(h, 0.0)
    Em, Fm, Gm = coeffs(-h, 0.0)
    Eq, Fq, Gq = coeffs(0.0, h)
    En, Fn, Gn = coeffs(0.0, -h)
    _, Fpq, _ = coeffs(h, h)
    _, Fpn, _ = coeffs(h, -h)
    _, Fmq, _ = coeffs(-h, h)
    _, Fmn, _ = coeffs(-h, -h)

    E_u = (Ep - Em) / (2 * h)
    E_v = (Eq - En) / (2 * h)
    F_u = (Fp - Fm) / (2 * h)
    F_v = (Fq - Fn) / (2 * h)
    G_u = (Gp - Gm) / (2 * h)
    G_v = (Gq - Gn) / (2 * h)
    E_vv = (Eq - 2 * E + En) / (h * h)
    G_uu = (Gp - 2 * G + Gm) / (h * h)
    F_uv = (Fpq - Fpn - Fmq + Fmn) / (4 * h * h)

    m1 = np.array([
        [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
        [F_v - 0.5 * G_u, E, F],
        [0.5 * G_v, F, G],
    ])
    m2 = np.array([
        [0.0, 0.5 * E_v, 0.5 * G_u],
        [0.5 * E_v, E, F],
        [0.5 * G_u, F, G],
    ])
    return float((np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2)


def bump_metric(patch: PerturbationBump, t: float, x: float) -> MetricCoefficients:
    return patch.metric(t, x)


def bump_christoffel(patch: PerturbationBump, t: float, x: float) -> ChristoffelSymbols:
    return patch.christoffel(t, x)


def bump_curvature_on_axis(patch: PerturbationBump, t: float) -> float:
    return patch.curvature_on_axis(t)


__all__ = [
    "bump_profile",
    "MetricCoefficients",
    "ChristoffelSymbols",
    "BumpAnchor",
    "PerturbationBump",
    "brioschi_curvature_fd",
    "bump_metric",
    "bump_christoffel",
    "bump_curvature_on_axis",
]
