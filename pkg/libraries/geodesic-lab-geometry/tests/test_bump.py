"""Unit tests for the perturbation bump."""
import math

import pytest

from geodesic_lab_core.exceptions import BumpConfigurationError
from geodesic_lab_geometry.bump import (
    PerturbationBump,
    brioschi_curvature_fd,
    bump_christoffel,
    bump_curvature_on_axis,
    bump_metric,
    bump_profile,
)


def _axis_alpha_bump(shear: float) -> PerturbationBump:
    return PerturbationBump(amplitude=1.0, shear=shear)


class TestBumpProfile:
    """Test the compactly supported profile."""

    def test_support(self):
        """beta vanishes with its derivatives outside (-1, 1)."""
        assert bump_profile(1.0) == (0.0, 0.0, 0.0)
        assert bump_profile(-1.5) == (0.0, 0.0, 0.0)
        assert bump_profile(0.0)[0] == 1.0


class TestBumpMetric:
    """Test metric coefficients."""

    def test_outside_support_is_flat(self):
        """Outside the support the metric is (1, a, 1)."""
        bump = _axis_alpha_bump(0.5)
        assert bump_metric(bump, 0.5, 0.0).as_tuple() == (1.0, 0.5, 1.0)
        assert bump_metric(bump, 0.0, 0.3).as_tuple() == (1.0, 0.5, 1.0)

    def test_axis_is_flat(self):
        """On x = 0 the metric is (1, a, 1) for any t."""
        bump = _axis_alpha_bump(0.3)
        for t in (-0.1, 0.0, 0.15):
            assert bump_metric(bump, t, 0.0).as_tuple() == (1.0, 0.3, 1.0)

    def test_g11_formula(self):
        """g11 = 1 - alpha x^2."""
        bump = PerturbationBump(amplitude=0.1, delta_t=2.0, delta_x=2.0)
        alpha = bump.alpha(0.0, 0.5)
        assert bump_metric(bump, 0.0, 0.5).g11 == pytest.approx(1.0 - alpha * 0.25)

    def test_positive_definiteness_enforced(self):
        """An amplitude that degenerates the metric is rejected."""
        with pytest.raises(BumpConfigurationError):
            PerturbationBump(amplitude=500.0, shear=0.8)


class TestChristoffel:
    """Test Christoffel symbols."""

    def test_axis_symbols_vanish(self):
        """Gamma^1_11 = Gamma^2_11 = 0 on x = 0."""
        bump = _axis_alpha_bump(0.4)
        symbols = bump_christoffel(bump, 0.05, 0.0)
        assert symbols.g1_11 == pytest.approx(0.0, abs=1e-15)
        assert symbols.g2_11 == pytest.approx(0.0, abs=1e-15)

    def test_x_line_symbols_vanish(self):
        """Gamma^k_22 vanish everywhere, so x-lines stay geodesics."""
        bump = _axis_alpha_bump(0.4)
        symbols = bump_christoffel(bump, 0.05, 0.04)
        assert symbols.g1_22 == 0.0 and symbols.g2_22 == 0.0

    def test_flat_bump_has_no_symbols(self):
        """Zero amplitude gives vanishing symbols."""
        assert bump_christoffel(PerturbationBump(amplitude=0.0), 0.0, 0.05).max_abs() == 0.0


class TestCurvature:
    """Test the curvature of the bump metric."""

    def test_on_axis_values(self):
        """K(t, 0) = alpha(t, 0) / (1 - a^2)."""
        flat = PerturbationBump(amplitude=0.1, shear=0.0)
        sheared = PerturbationBump(amplitude=0.12, shear=0.5)
        assert bump_curvature_on_axis(flat, 0.0) == pytest.approx(0.1)
        assert bump_curvature_on_axis(sheared, 0.0) == pytest.approx(0.16)
        assert bump_curvature_on_axis(flat, 0.5) == 0.0

    def test_on_axis_matches_full_formula(self):
        """The on-axis value agrees with the general curvature."""
        bump = _axis_alpha_bump(0.8)
        for t in (-0.1, 0.0, 0.07):
            assert bump.curvature(t, 0.0) == pytest.approx(bump.curvature_on_axis(t), rel=1e-12)

    def test_matches_finite_difference_brioschi(self):
        """Closed-form curvature agrees with finite-difference Brioschi."""
        bump = _axis_alpha_bump(0.8)
        for t, x in [(0.0, 0.0), (0.05, 0.03), (-0.1, -0.05), (0.12, 0.07)]:
            fd = brioschi_curvature_fd(lambda u, v: bump.metric(u, v).as_tuple(), t, x, h=1e-5)
            assert bump.curvature(t, x) == pytest.approx(fd, abs=1e-4)

    def test_geodesic_rhs_flat_outside(self):
        """Outside the support geodesics are straight lines."""
        assert _axis_alpha_bump(0.2).geodesic_rhs(0.5, 0.5, 1.0, 0.0) == (0.0, 0.0, 0.0)


class TestAnchoredChart:
    """Test the chart laid over the flat band."""

    def test_chart_roundtrip(self):
        """to_chart inverts from_chart near the anchor."""
        psi = math.pi - math.asin(0.6)
        bump = PerturbationBump.anchored(1.0, 0.3, 3.4, psi, band_radius=1.0)
        t, x = bump.to_chart(0.35, 3.42)
        theta, l = bump.from_chart(t, x)
        assert theta == pytest.approx(0.35)
        assert l == pytest.approx(3.42)

    def test_anchor_direction_is_t_axis(self):
        """The carrier direction maps to (t', x') = (1, 0)."""
        psi = math.pi - math.asin(0.6)
        bump = PerturbationBump.anchored(1.0, 0.3, 3.4, psi, band_radius=1.0)
        vt, vx = bump.velocity_to_chart(psi)
        assert vt == pytest.approx(1.0)
        assert vx == pytest.approx(0.0, abs=1e-12)
        assert bump.shear == pytest.approx(0.8)
        assert bump.velocity_from_chart(vt, vx) == pytest.approx(psi)

    def test_meridian_is_x_line(self):
        """Meridians (psi = 0) have t' = 0 in the chart."""
        bump = PerturbationBump.anchored(1.0, 0.3, 3.4, math.pi - math.asin(0.6), band_radius=1.0)
        vt, _ = bump.velocity_to_chart(0.0)
        assert vt == pytest.approx(0.0, abs=1e-12)
