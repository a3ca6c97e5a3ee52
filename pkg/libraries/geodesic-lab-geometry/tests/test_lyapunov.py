"""Unit tests for finite-time exponents and the Lyapunov bound."""
import math

import pytest

from geodesic_lab_geometry.lyapunov import (
    LyapunovBoundParams,
    finite_time_exponent,
    hyperbolic_rate,
    measure_curvature_bound,
    threshold_length,
)
from geodesic_lab_geometry.states import GeodesicState
from geodesic_lab_geometry.surface import build_dumbbell


@pytest.fixture(scope="module")
def dumbbell():
    return build_dumbbell(d=20.0)


class TestLyapunovBoundParams:
    """Test the bound arithmetic."""

    def test_bound_value(self):
        """bound = L^2 t0 / (d eps) + eps / 2."""
        params = LyapunovBoundParams(epsilon=0.5, curvature_bound=2.0, sojourn_time=3.0, cylinder_length=100.0)
        assert params.bound == pytest.approx(4.0 * 3.0 / 50.0 + 0.25)

    def test_threshold(self):
        """d(eps) = 2 L^2 t0 / eps^2 and the bound drops below eps beyond it."""
        assert threshold_length(0.5, 2.0, 3.0) == pytest.approx(96.0)
        params = LyapunovBoundParams(0.5, 2.0, 3.0, 200.0)
        assert params.above_threshold
        assert params.bound < params.epsilon

    def test_rejects_bad_epsilon(self):
        """eps must lie in (0, 1)."""
        with pytest.raises(ValueError):
            LyapunovBoundParams(1.5, 2.0, 3.0, 10.0)


class TestFiniteTimeExponent:
    """Test the eps-weighted exponent."""

    def test_flat_band_circle(self, dumbbell):
        """A band circle has polynomial Jacobi growth: exponent <= eps/2."""
        v0 = GeodesicState(0.0, dumbbell.landmarks.l1, math.pi / 2)
        assert finite_time_exponent(dumbbell, v0, 50.0, 0.5) <= 0.25

    def test_neck_geodesic_rate(self, dumbbell):
        """Along the neck geodesic the exponent approaches sqrt(-K(l0))."""
        v0 = GeodesicState(0.0, dumbbell.landmarks.l0, math.pi / 2)
        rate = hyperbolic_rate(dumbbell)
        assert finite_time_exponent(dumbbell, v0, 15.0, 0.5) == pytest.approx(rate, abs=0.1)

    def test_curvature_bound(self, dumbbell):
        """L exceeds both 1 and sup |K|."""
        L = measure_curvature_bound(dumbbell)
        assert L > 1.0
        assert L >= abs(dumbbell.gaussian_curvature(dumbbell.landmarks.l0))
