"""Unit tests for geodesic states."""
import math

import pytest

from geodesic_lab_geometry.states import (
    GeodesicState,
    RiccatiState,
    flip,
    split_psi,
    wrap_angle,
    wrap_positive,
)
from geodesic_lab_geometry.surface import build_round_sphere


class TestAngles:
    """Test angle reduction helpers."""

    def test_wrap_angle_range(self):
        """wrap_angle lands in (-pi, pi]."""
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(0.5) == pytest.approx(0.5)

    def test_wrap_positive_range(self):
        """wrap_positive lands in [0, 2*pi)."""
        assert wrap_positive(-0.5) == pytest.approx(2 * math.pi - 0.5)
        assert wrap_positive(2 * math.pi) == pytest.approx(0.0)

    def test_split_psi_headings(self):
        """Backward directions get heading -1 and phi in (-pi/2, pi/2]."""
        assert split_psi(0.3) == (pytest.approx(0.3), 1)
        phi, heading = split_psi(math.pi)
        assert heading == -1 and phi == pytest.approx(0.0)
        phi, heading = split_psi(-math.pi / 2)
        assert heading == -1 and phi == pytest.approx(math.pi / 2)


class TestGeodesicState:
    """Test GeodesicState construction and flip."""

    def test_rejects_bad_phi(self):
        """phi outside (-pi/2, pi/2] is rejected."""
        with pytest.raises(ValueError):
            GeodesicState(0.0, 1.0, 2.0)

    def test_flip_meridian(self):
        """Flipping a meridian direction toggles the heading only."""
        v = GeodesicState(0.2, 1.0, 0.0)
        w = flip(v)
        assert w.phi == 0.0 and w.heading == -1
        assert w.psi == pytest.approx(math.pi)

    def test_flip_involution(self):
        """flip(flip(v)) == v."""
        v = GeodesicState(1.0, 0.7, -0.4, s=3.0)
        assert flip(flip(v)) == v

    def test_clairaut_changes_sign(self):
        """clairaut(flip(v)) == -clairaut(v)."""
        sphere = build_round_sphere()
        v = GeodesicState(0.0, 1.0, 0.6)
        assert sphere.clairaut(flip(v)) == pytest.approx(-sphere.clairaut(v))

    def test_from_psi_roundtrip(self):
        """from_psi and psi agree up to 2*pi."""
        v = GeodesicState.from_psi(0.0, 1.0, 2.5)
        assert wrap_angle(v.psi - 2.5) == pytest.approx(0.0, abs=1e-12)


class TestRiccatiState:
    """Test the u/w representation."""

    def test_w_chart(self):
        """w = 0 is an infinite wavefront curvature."""
        assert RiccatiState(0.0, 0.0, "w").u == math.inf
        assert RiccatiState(0.0, 0.5, "w").u == pytest.approx(2.0)
