"""Unit tests for geodesic, Jacobi and Riccati integration."""
import math

import numpy as np
import pytest

from geodesic_lab_geometry.flow import (
    FlowTolerance,
    StopCondition,
    integrate_geodesic,
    integrate_jacobi,
    integrate_riccati,
    shoot,
    wronskian,
)
from geodesic_lab_geometry.states import GeodesicState, flip, wrap_angle
from geodesic_lab_geometry.surface import build_dumbbell, build_round_sphere


@pytest.fixture(scope="module")
def sphere():
    return build_round_sphere()


@pytest.fixture(scope="module")
def dumbbell():
    return build_dumbbell(d=20.0)


def _band_circle(surface):
    return GeodesicState(0.0, surface.landmarks.l1, math.pi / 2)


class TestGeodesicFlow:
    """Test the geodesic integrator."""

    def test_equator_closes(self, sphere):
        """The equator returns to its start after 2*pi."""
        traj = integrate_geodesic(sphere, GeodesicState(0.0, math.pi / 2, math.pi / 2), 2 * math.pi)
        assert abs(wrap_angle(traj.end.theta)) < 1e-8
        assert traj.end.l == pytest.approx(math.pi / 2, abs=1e-8)

    def test_meridian_stays_meridian(self, dumbbell):
        """Meridians keep phi = 0 and constant theta."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.4, 1.0, 0.0), 2.0)
        assert np.allclose(traj.theta, 0.4)
        assert np.allclose(np.sin(traj.psi), 0.0, atol=1e-14)
        assert traj.end.l == pytest.approx(3.0, abs=1e-9)

    def test_meridian_through_pole(self, sphere):
        """A meridian crosses the pole onto the opposite meridian."""
        v0 = GeodesicState.from_psi(0.0, 0.5, math.pi)
        traj = integrate_geodesic(sphere, v0, 1.0)
        assert traj.end.l == pytest.approx(0.5, abs=1e-9)
        assert abs(wrap_angle(traj.end.theta - math.pi)) < 1e-9
        assert traj.end.heading == 1
        assert [e.kind for e in traj.events].count("pole_Q") == 1

    def test_sections_cycle(self, dumbbell):
        """An orbit launched inward from alpha visits S1, S2, S3, S4 in turn."""
        lm = dumbbell.landmarks
        phi0 = math.asin(lm.r0 / lm.rho)
        v0 = GeodesicState(0.0, lm.l_alpha, 0.5 * phi0, heading=-1)
        traj = integrate_geodesic(dumbbell, v0, 120.0)
        sections = [e.section for e in traj.section_events()]
        assert sections[:4] == ["S1", "S2", "S3", "S4"]

    def test_clairaut_conserved(self, dumbbell):
        """r sin(psi) drifts by less than 1e-8 on the unperturbed surface."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, 3.4, 0.3), 60.0)
        values = traj.clairaut_values()
        assert np.max(np.abs(values - values[0])) < 1e-8

    def test_time_reversal(self, dumbbell):
        """Flow, flip, flow returns the flipped start."""
        v0 = GeodesicState(0.2, 3.0, 0.4)
        forward = integrate_geodesic(dumbbell, v0, 15.0)
        back = integrate_geodesic(dumbbell, flip(forward.end).with_time(0.0), 15.0)
        assert abs(wrap_angle(back.end.theta - v0.theta)) < 1e-6
        assert back.end.l == pytest.approx(v0.l, abs=1e-6)
        assert abs(wrap_angle(back.end.psi - flip(v0).psi)) < 1e-6

    def test_stop_condition(self, dumbbell):
        """Integration stops at the first matching section crossing."""
        lm = dumbbell.landmarks
        v0 = GeodesicState(0.0, lm.l_alpha, 0.2, heading=-1)
        traj = integrate_geodesic(dumbbell, v0, 200.0, stop=StopCondition("alpha", "S1"))
        assert traj.stopped_by is not None
        assert traj.stopped_by.section == "S1"
        assert traj.end.l == pytest.approx(lm.l_alpha, abs=1e-9)
        assert traj.duration < 200.0

    def test_state_at_matches_samples(self, dumbbell):
        """Dense output reproduces the sampled states."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, 3.4, 0.3), 5.0, t_eval=np.linspace(0.0, 5.0, 11))
        state = traj.state_at(traj.s[4])
        assert state.l == pytest.approx(traj.l[4], abs=1e-12)

    def test_rejects_nonpositive_time(self, sphere):
        """T must be positive."""
        with pytest.raises(ValueError):
            integrate_geodesic(sphere, GeodesicState(0.0, 1.0, 0.0), 0.0)


class TestJacobi:
    """Test Jacobi fields along geodesics."""

    def test_flat_band_linear(self, dumbbell):
        """K = 0 on the band: y(t) = t."""
        traj = integrate_geodesic(dumbbell, _band_circle(dumbbell), 0.5, t_eval=np.linspace(0.0, 0.5, 6))
        series = integrate_jacobi(dumbbell, traj, 0.0, 1.0)
        assert np.allclose(series.y, series.s, atol=1e-10)

    def test_sphere_sine(self, sphere):
        """K = 1: y(t) = sin t."""
        traj = integrate_geodesic(sphere, GeodesicState(0.0, math.pi / 2, math.pi / 2), 3.0)
        series = integrate_jacobi(sphere, traj, 0.0, 1.0)
        assert series.final.y == pytest.approx(math.sin(3.0), abs=1e-9)

    def test_wronskian_constant(self, dumbbell):
        """The Wronskian of (1, 0) and (0, 1) stays 1."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, 3.0, 0.4), 10.0, t_eval=np.linspace(0.0, 10.0, 21))
        a = integrate_jacobi(dumbbell, traj, 1.0, 0.0)
        b = integrate_jacobi(dumbbell, traj, 0.0, 1.0)
        assert np.max(np.abs(wronskian(a, b) - 1.0)) < 1e-8

    def test_jacobi_through_pole(self, sphere):
        """The closed-form polar passage keeps y = sin t."""
        traj = shoot(sphere, 0.0, 0.5, math.pi, 1.0)
        assert traj.final_jacobi[0, 0] == pytest.approx(math.sin(1.0), abs=1e-8)

    def test_shoot_from_pole(self, sphere):
        """Shooting from a pole follows the meridian of the given angle."""
        traj = shoot(sphere, 0.0, 0.0, 0.3, 2.0)
        assert traj.end.l == pytest.approx(2.0, abs=1e-9)
        assert abs(wrap_angle(traj.end.theta - 0.3)) < 1e-9
        assert traj.final_jacobi[0, 0] == pytest.approx(math.sin(2.0), abs=1e-8)

    def test_derivative_identity(self, dumbbell):
        """y'(T) = y'(0) - integral of K y."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, 3.0, 0.4), 8.0, jacobi=[(0.0, 1.0)])
        dy = traj.final_jacobi[0, 1]
        assert dy == pytest.approx(1.0 - traj.final_accumulators[0, 0], abs=1e-6)


class TestRiccati:
    """Test the Riccati equation with chart switching."""

    def test_flat_solution(self, dumbbell):
        """K = 0, u0 = 1: u = 1/(1 + t)."""
        traj = integrate_geodesic(dumbbell, _band_circle(dumbbell), 0.5, t_eval=[0.0, 0.25, 0.5])
        series = integrate_riccati(dumbbell, traj, 1.0)
        assert series.final.u == pytest.approx(1.0 / 1.5, abs=1e-9)

    def test_sphere_blowup_is_conjugate_point(self, sphere):
        """K = 1, u0 = 0: u = -tan t with a conjugate point at pi/2."""
        traj = integrate_geodesic(sphere, GeodesicState(0.0, math.pi / 2, math.pi / 2), 2.5)
        series = integrate_riccati(sphere, traj, 0.0)
        assert len(series.conjugate_times) == 1
        assert series.conjugate_times[0] == pytest.approx(math.pi / 2, abs=1e-7)
        assert series.final.u == pytest.approx(-math.tan(2.5), abs=1e-7)

    def test_neck_converges_to_fixed_point(self, dumbbell):
        """Along the neck geodesic u tends to sqrt(-K(l0))."""
        l0 = dumbbell.landmarks.l0
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, l0, math.pi / 2), 15.0)
        series = integrate_riccati(dumbbell, traj, 0.5)
        rate = math.sqrt(-dumbbell.gaussian_curvature(l0))
        assert series.final.u == pytest.approx(rate, abs=1e-6)

    def test_consistent_with_jacobi(self, dumbbell):
        """u = y'/y for the Jacobi field with (y, y') = (1, u0)."""
        traj = integrate_geodesic(dumbbell, GeodesicState(0.0, 3.4, 0.3), 2.0)
        riccati = integrate_riccati(dumbbell, traj, 0.2)
        jacobi = integrate_jacobi(dumbbell, traj, 1.0, 0.2)
        assert riccati.final.u == pytest.approx(jacobi.final.dy / jacobi.final.y, abs=1e-6)


class TestFlowTolerance:
    """Test tolerance settings."""

    def test_halved(self):
        """halved() halves both tolerances."""
        tol = FlowTolerance().halved()
        assert tol.rtol == pytest.approx(5e-11)
        assert tol.atol == pytest.approx(5e-13)
