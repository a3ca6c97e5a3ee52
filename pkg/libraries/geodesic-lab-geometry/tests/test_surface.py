"""Unit tests for profile surfaces."""
import math

import numpy as np
import pytest

from geodesic_lab_core.exceptions import ChartError, DomainError, SurfaceConstructionError
from geodesic_lab_geometry.states import GeodesicState
from geodesic_lab_geometry.surface import (
    POLE_RADIUS,
    RegionParams,
    build_dumbbell,
    build_round_sphere,
    clairaut,
    gaussian_curvature,
    profile_eval,
)


@pytest.fixture(scope="module")
def dumbbell():
    return build_dumbbell(d=20.0)


class TestRoundSphere:
    """Test the round sphere oracle."""

    def test_equator_radius(self):
        """r(pi/2) = 1."""
        assert profile_eval(build_round_sphere(), math.pi / 2) == pytest.approx(1.0)

    def test_curvature_is_one(self):
        """K = 1 everywhere, poles included."""
        sphere = build_round_sphere()
        for l in (0.0, 0.3, 1.5, math.pi):
            assert gaussian_curvature(sphere, l) == pytest.approx(1.0)

    def test_area(self):
        """Area is 4*pi."""
        assert build_round_sphere().area() == pytest.approx(4 * math.pi)

    def test_clairaut_examples(self):
        """Equator with phi = pi/2 gives 1; meridians give 0."""
        sphere = build_round_sphere()
        assert clairaut(sphere, GeodesicState(0.0, math.pi / 2, math.pi / 2)) == pytest.approx(1.0)
        assert clairaut(sphere, GeodesicState(0.0, 1.0, 0.0)) == 0.0

    def test_clairaut_at_pole_fails(self):
        """The Clairaut value is undefined at a pole."""
        with pytest.raises(ChartError):
            clairaut(build_round_sphere(), GeodesicState(0.0, 0.0, 0.0))

    def test_domain_error(self):
        """l outside [0, R] raises DomainError."""
        with pytest.raises(DomainError):
            profile_eval(build_round_sphere(), -0.1)

    def test_pole_passage_matches_great_circle(self):
        """Clairaut quadrature across the polar disc matches spherical trigonometry."""
        sphere = build_round_sphere()
        eps = POLE_RADIUS
        l_min = 0.5 * eps
        c = math.sin(l_min)
        dtheta, time, l_turn = sphere.passage(c, eps, toward_end=False)
        sigma = math.acos(math.cos(eps) / math.cos(l_min))
        assert l_turn == pytest.approx(l_min, abs=1e-12)
        assert time == pytest.approx(2 * sigma, abs=1e-9)
        assert dtheta == pytest.approx(2 * math.atan(math.tan(sigma) / math.sin(l_min)), abs=1e-8)

    def test_pole_passage_through_pole(self):
        """c = 0 crosses the pole: delta theta = pi."""
        dtheta, time, _ = build_round_sphere().passage(0.0, POLE_RADIUS, toward_end=False)
        assert dtheta == pytest.approx(math.pi)
        assert time == pytest.approx(2 * POLE_RADIUS)


class TestDumbbell:
    """Test dumbbell construction and landmarks."""

    def test_landmarks(self, dumbbell):
        """Landmarks follow the default region parameters."""
        lm = dumbbell.landmarks
        assert lm.l0 == pytest.approx(1.9)
        assert lm.l1 == pytest.approx(3.4)
        assert lm.l_alpha == pytest.approx(4.9)
        assert lm.l_beta == pytest.approx(24.9)
        assert dumbbell.length == pytest.approx(25.7)

    def test_band_and_cylinder_radii(self, dumbbell):
        """Flat band has radius r1 and the cylinder radius rho."""
        lm = dumbbell.landmarks
        assert profile_eval(dumbbell, lm.l1) == pytest.approx(1.0, abs=1e-12)
        assert profile_eval(dumbbell, 0.5 * (lm.l_alpha + lm.l_beta)) == pytest.approx(0.8, abs=1e-12)
        assert profile_eval(dumbbell, 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_curvatures(self, dumbbell):
        """K = 0 on the band and K(l0) = -r''(l0)/r0 < 0."""
        lm = dumbbell.landmarks
        assert gaussian_curvature(dumbbell, lm.l1) == pytest.approx(0.0, abs=1e-12)
        assert gaussian_curvature(dumbbell, lm.l0) == pytest.approx(-0.5 / 0.6)

    def test_curvature_matches_finite_difference(self, dumbbell):
        """K = -r''/r agrees with a second difference of the profile."""
        h = 1e-3
        for l in (0.4, 1.3, 2.4, 4.3, 25.2):
            r = profile_eval(dumbbell, l)
            ddr = (profile_eval(dumbbell, l + h) - 2 * r + profile_eval(dumbbell, l - h)) / h ** 2
            assert gaussian_curvature(dumbbell, l) == pytest.approx(-ddr / r, abs=1e-4)

    def test_invariants_pass(self, dumbbell):
        """Every machine-checked invariant passes on the default surface."""
        failed = [o.name for o in dumbbell.check_invariants() if not o.passed]
        assert failed == []

    def test_region_independent_of_d(self):
        """Changing d only moves the cap."""
        short, long = build_dumbbell(d=10.0), build_dumbbell(d=20.0)
        ls = np.linspace(0.0, short.landmarks.l_alpha, 50)
        assert np.allclose(short.profile.radius_array(ls), long.profile.radius_array(ls))
        assert long.length - short.length == pytest.approx(10.0)

    def test_invalid_region_names_invariant(self):
        """rho above the band radius fails with the invariant named."""
        with pytest.raises(SurfaceConstructionError) as exc_info:
            build_dumbbell(RegionParams(rho=1.1), d=20.0)
        assert exc_info.value.details["invariant"] == "alpha_below_band"

    def test_sample_table_columns(self, dumbbell):
        """The sampled table carries l, r, r', r'' and K."""
        table = dumbbell.sample_table(101)
        assert set(table) == {"l", "r", "dr", "ddr", "K"}
        assert len(table["l"]) == 101
