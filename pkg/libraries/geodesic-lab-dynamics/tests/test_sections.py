"""Unit tests for section transits, return maps and circle witnesses."""
import math

import pytest

from geodesic_lab_core.exceptions import SectionDomainError
from geodesic_lab_dynamics.sections import (
    ReturnMap,
    SectionPoint,
    area_jacobian,
    classify_side,
    detect_invariant_circle,
    limit_map,
    measure_d0,
    measure_phi0,
    measure_sojourn,
    numeric_transit,
    psi_cylinder,
    psi_turn,
    scaled_map,
    scaling_distance,
    separatrix_phi,
    tabulate_transit,
)
from geodesic_lab_geometry.flow import FlowTolerance
from geodesic_lab_geometry.states import GeodesicState, wrap_angle
from geodesic_lab_geometry.surface import build_dumbbell


@pytest.fixture(scope="module")
def dumbbell():
    return build_dumbbell(d=20.0)


@pytest.fixture(scope="module")
def a2(dumbbell):
    return tabulate_transit(dumbbell, "a2", n_nodes=32)


@pytest.fixture(scope="module")
def a4(dumbbell):
    return tabulate_transit(dumbbell, "a4", n_nodes=32)


class TestSectionPoint:
    """Test section points."""

    def test_state_on_beta_out(self, dumbbell):
        """S3 points sit on beta heading toward the region."""
        state = SectionPoint(0.1, 0.2, "S3").state(dumbbell)
        assert state.l == dumbbell.landmarks.l_beta
        assert state.heading == -1

    def test_rejects_grazing_angle(self):
        """|phi| must stay below pi/2."""
        with pytest.raises(ValueError):
            SectionPoint(0.0, math.pi / 2, "S1")

    def test_separatrix_phi(self, dumbbell):
        """phi_0 = arcsin(r0 / rho)."""
        assert separatrix_phi(dumbbell) == pytest.approx(math.asin(0.75))


class TestCylinderTransit:
    """Test the closed-form cylinder transit."""

    def test_advance(self):
        """rho = 1, d = 2, phi = pi/4 advances theta by 2."""
        out = psi_cylinder(2.0, 1.0, SectionPoint(0.0, math.pi / 4, "S1"))
        assert out.theta == pytest.approx(2.0)
        assert out.phi == pytest.approx(math.pi / 4)
        assert out.section == "S2"

    def test_return_direction(self):
        """From S3 the advance is reversed."""
        out = psi_cylinder(2.0, 1.0, SectionPoint(0.0, math.pi / 4, "S3"))
        assert out.theta == pytest.approx(-2.0)
        assert out.section == "S4"

    def test_matches_flow(self, dumbbell):
        """The integrated transit agrees with the closed form."""
        lm = dumbbell.landmarks
        start = SectionPoint(0.3, 0.2, "S1")
        transit = numeric_transit(dumbbell, start)
        expected = psi_cylinder(lm.d, lm.rho, start)
        assert abs(wrap_angle(transit.end.theta - expected.theta)) < 1e-7
        assert transit.end.phi == pytest.approx(0.2, abs=1e-8)


class TestTurnTransits:
    """Test the tabulated turns a2 and a4."""

    def test_meridian_turns_by_pi(self, a2, a4):
        """a(0) = pi."""
        assert a2(0.0) == pytest.approx(math.pi, abs=1e-12)
        assert a4(0.0) == pytest.approx(math.pi, abs=1e-12)

    def test_odd_symmetry(self, a2):
        """a(phi) + a(-phi) = 2*pi."""
        assert a2(0.4) + a2(-0.4) == pytest.approx(2 * math.pi, abs=1e-12)

    def test_matches_flow(self, dumbbell, a2):
        """Tabulated a2 agrees with the integrated cap transit."""
        start = SectionPoint(0.0, 0.3, "S2")
        transit = numeric_transit(dumbbell, start)
        expected = psi_turn(a2, start)
        assert abs(wrap_angle(transit.end.theta - expected.theta)) < 1e-6
        assert transit.end.phi == pytest.approx(-0.3, abs=1e-6)

    def test_domain(self, a2):
        """Evaluation outside the tabulated range raises."""
        with pytest.raises(SectionDomainError):
            a2(a2.phi_max + 0.1)

    def test_wrong_section(self, a2):
        """a2 starts on S2."""
        with pytest.raises(ValueError):
            psi_turn(a2, SectionPoint(0.0, 0.1, "S4"))


class TestReturnMap:
    """Test the composed return map."""

    def test_preserves_phi_unperturbed(self, dumbbell, a2, a4):
        """Without a bump the return map keeps phi."""
        fn = ReturnMap(dumbbell, a2, a4).as_map("S1")
        _, phi = fn(0.4, 0.03)
        assert phi == pytest.approx(0.03, abs=1e-12)

    def test_area_preserving(self, dumbbell, a2, a4):
        """The Jacobian in (theta, sin phi) is 1."""
        fn = ReturnMap(dumbbell, a2, a4).as_map("S1")
        assert area_jacobian(fn, 0.4, 0.03) == pytest.approx(1.0, abs=1e-6)

    def test_limit_map(self):
        """k_inf(0, 1) = (2 / rho, 1)."""
        assert limit_map(2.0, 0.0, 1.0) == (1.0, 1.0)

    def test_scaled_map_domain(self, dumbbell, a2, a4):
        """k_d is defined for |Phi| <= 1."""
        fn = ReturnMap(dumbbell, a2, a4).as_map("S1")
        with pytest.raises(SectionDomainError):
            scaled_map(fn, 20.0, 0.0, 1.5)

    def test_scaling_limit_improves_with_d(self):
        """k_d moves toward k_inf as d grows."""
        distances = []
        for d in (20.0, 200.0):
            surface = build_dumbbell(d=d)
            fn = ReturnMap(surface, tabulate_transit(surface, "a2", n_nodes=16),
                           tabulate_transit(surface, "a4", n_nodes=16)).as_map("S1")
            distances.append(scaling_distance(fn, d, surface.landmarks.rho, n_grid=8))
        assert distances[1] < distances[0]


class TestCircleWitness:
    """Test invariant-circle detection."""

    def test_unperturbed_is_confined(self, dumbbell, a2, a4):
        """Every orbit of the integrable map is a barrier."""
        fn = ReturnMap(dumbbell, a2, a4).as_map("S1")
        witness = detect_invariant_circle(fn, 20.0, n_iter=50, n_seeds=4)
        assert witness.confined
        assert witness.band[1] < 1.0 / 20.0

    def test_escape_without_barrier(self):
        """A map that pushes phi outward has no barrier."""
        witness = detect_invariant_circle(lambda t, p: (t + 1.0, p + 0.01), 10.0, n_iter=100, n_seeds=4)
        assert witness.verdict == "escaped"

    def test_classify_needs_confined_witness(self, dumbbell):
        """Classification without a certified circle is refused."""
        with pytest.raises(ValueError):
            classify_side(dumbbell, [], GeodesicState(0.0, dumbbell.landmarks.l1, 0.2))


@pytest.fixture(scope="module")
def sojourn(dumbbell):
    return measure_sojourn(dumbbell, 1.0 / 20.0, n_phi=3, n_theta=2)


class TestMeasuredConstants:
    """Test the measured t0, phi_0 and d0."""

    def test_sojourn_bounds_every_sample(self, sojourn):
        """t0 is positive and bounds each sampled cap and region transit."""
        assert sojourn.t0 > 0.0
        assert len(sojourn.rows) == 6
        assert all(max(r["cap"], r["region"]) <= sojourn.t0 for r in sojourn.rows)

    def test_sojourn_stable_under_halving(self, dumbbell, sojourn):
        """Halving the integrator tolerances leaves t0 unchanged."""
        again = measure_sojourn(dumbbell, 1.0 / 20.0, n_phi=3, n_theta=2, tol=FlowTolerance().halved())
        assert again.t0 == pytest.approx(sojourn.t0, rel=1e-6)

    def test_sojourn_stable_when_d_doubles(self, sojourn):
        """t0 of the surface with twice the cylinder agrees within 1%."""
        doubled = measure_sojourn(build_dumbbell(d=40.0), 1.0 / 40.0, n_phi=3, n_theta=2)
        assert doubled.t0 == pytest.approx(sojourn.t0, rel=0.01)

    def test_phi0_positive_and_stable(self, dumbbell, sojourn):
        """phi_0 exceeds the W1 band and moves by at most the bisection width when tolerances halve."""
        phi0 = measure_phi0(dumbbell, t0=sojourn.t0, n_theta=2, step=0.05, xtol=1e-3)
        again = measure_phi0(dumbbell, t0=sojourn.t0, n_theta=2, step=0.05, xtol=1e-3,
                             tol=FlowTolerance().halved())
        assert 1.0 / 20.0 < phi0 < 0.5 * math.pi
        assert abs(again - phi0) <= 2e-3

    def test_d0_first_confined(self, a2, a4):
        """The sweep stops at the first d with a confined witness."""
        d0, sweep = measure_d0(lambda d: ReturnMap(build_dumbbell(d=d), a2, a4).as_map("S1"),
                               [20.0, 40.0], n_iter=50, n_seeds=4)
        assert d0 == 20.0
        assert len(sweep) == 1

    def test_d0_missing(self):
        """Without a barrier no d0 is found and every d is tried."""
        d0, sweep = measure_d0(lambda d: (lambda t, p: (t + 1.0, p + 0.01)), [10.0, 20.0], n_iter=100, n_seeds=4)
        assert d0 is None
        assert [w.d for w in sweep] == [10.0, 20.0]
