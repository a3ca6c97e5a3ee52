"""Unit tests for separatrix tracing and the splitting gap."""
import math

import pytest

from geodesic_lab_core.exceptions import SeparatrixError
from geodesic_lab_dynamics.homoclinic import (
    anchor_state,
    linear_response_spread,
    place_bump,
    separatrix_deviation,
    separatrix_direction,
    SplittingResult,
    splitting_gap,
    trace_separatrix,
)
from geodesic_lab_geometry.lyapunov import hyperbolic_rate
from geodesic_lab_geometry.surface import build_dumbbell

AMPLITUDE = 0.05


@pytest.fixture(scope="module")
def dumbbell():
    return build_dumbbell(d=20.0)


@pytest.fixture(scope="module")
def bump(dumbbell):
    return place_bump(dumbbell, AMPLITUDE)


@pytest.fixture(scope="module")
def trace(dumbbell, bump):
    an = bump.anchor
    return trace_separatrix(dumbbell, anchor_state(dumbbell, an.theta, an.l), bump)


class TestSeparatrixDirection:
    """Test the Clairaut direction of the separatrix."""

    def test_value(self):
        """r0 = 0.5 at r = 1 gives pi/6."""
        assert separatrix_direction(0.5, 1.0) == pytest.approx(math.pi / 6)

    def test_below_neck_radius(self):
        """No direction where r < r0."""
        with pytest.raises(SeparatrixError):
            separatrix_direction(0.6, 0.5)

    def test_anchor_clairaut(self, dumbbell):
        """The anchor state has Clairaut value r0."""
        state = anchor_state(dumbbell, 0.0, dumbbell.landmarks.l1)
        assert abs(dumbbell.clairaut(state)) == pytest.approx(dumbbell.landmarks.r0, abs=1e-12)


class TestBumpPlacement:
    """Test placing the bump on the inbound passage."""

    def test_anchor_inside_band(self, dumbbell, bump):
        """The box lies inside the flat band."""
        lo, hi = bump.box_l_extent()
        band_lo, band_hi = dumbbell.landmarks.band
        assert band_lo < lo and hi < band_hi

    def test_amplitude_kept(self, bump):
        """The requested amplitude is used."""
        assert bump.amplitude == AMPLITUDE


class TestSeparatrixTrace:
    """Test the traced separatrix."""

    def test_clairaut_drift(self, trace):
        """The Clairaut value stays within 1e-8 along both branches."""
        assert trace.max_drift <= 1e-8

    def test_approach_rate(self, dumbbell, trace):
        """Both branches approach gamma_0 at rate sqrt(-K(l0))."""
        rate = hyperbolic_rate(dumbbell)
        assert trace.forward_rate == pytest.approx(rate, rel=0.05)
        assert trace.backward_rate == pytest.approx(rate, rel=0.05)

    def test_ends_near_neck(self, dumbbell, trace):
        """The branch ends are at the seed distance from gamma_0."""
        l0 = dumbbell.landmarks.l0
        assert trace.forward_end.l - l0 == pytest.approx(trace.seed_distance, abs=1e-10)
        assert trace.backward_end.l - l0 == pytest.approx(trace.seed_distance, abs=1e-10)

    def test_support_window(self, bump, trace):
        """The bump support is [-delta_t, delta_t] around the anchor."""
        assert trace.t1 == pytest.approx(-bump.delta_t, abs=1e-9)
        assert trace.t2 == pytest.approx(bump.delta_t, abs=1e-9)

    def test_perturbed_separatrix_unchanged(self, dumbbell, bump, trace):
        """The bump keeps the separatrix a geodesic."""
        assert separatrix_deviation(dumbbell.with_bump(bump), trace) <= 1e-6


class TestSplittingGap:
    """Test the splitting gap u+ - u- at t2."""

    def test_unperturbed_gap_vanishes(self, dumbbell, bump, trace):
        """With A = 0 the stable and unstable solutions coincide."""
        result = splitting_gap(dumbbell.with_bump(bump.with_amplitude(0.0)), trace, error_bar=False)
        assert abs(result.gap) < 1e-5

    def test_gap_sign(self, dumbbell, bump, trace):
        """A positive amplitude opens a negative gap."""
        result = splitting_gap(dumbbell.with_bump(bump), trace, error_bar=False)
        assert result.gap < 0.0
        assert result.u_minus == pytest.approx(result.u_minus_jacobi, abs=1e-6)

    def test_linear_response_spread(self):
        """A linear gap has no spread in gap/A; A = 0 is skipped."""
        results = [
            SplittingResult(0.01, 0.5, 0.48, 0.0, 0.5, 1e-4),
            SplittingResult(0.02, 0.5, 0.46, 0.0, 0.5, 1e-4),
            SplittingResult(0.0, 0.5, 0.5, 0.0, 0.5, 1e-4),
        ]
        assert linear_response_spread(results) == pytest.approx(0.0)
