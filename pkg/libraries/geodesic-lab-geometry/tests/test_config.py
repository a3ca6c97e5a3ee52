"""Unit tests for geometry configuration."""
import math

import pytest

from geodesic_lab_geometry.config import SurfaceConfig


class TestSurfaceConfig:
    """Test SurfaceConfig factories."""

    def test_round_sphere(self):
        """The round-sphere kind builds the unit sphere."""
        surface = SurfaceConfig.create(kind="round-sphere").create_surface()
        assert surface.length == pytest.approx(math.pi)
        assert surface.landmarks is None

    def test_dumbbell_profile_overrides(self):
        """Profile keys override region parameters."""
        config = SurfaceConfig.create(d=10.0, profile={"band_half_width": 0.4, "cap_length": 0.9})
        surface = config.create_surface()
        assert surface.landmarks.b == pytest.approx(0.4)
        assert surface.length == pytest.approx(surface.landmarks.l_beta + 0.9)

    def test_unknown_kind(self):
        """Unknown surface kinds are rejected."""
        with pytest.raises(ValueError):
            SurfaceConfig.create(kind="torus")

    def test_bump_without_anchor(self):
        """Without an explicit anchor no bump is built here."""
        config = SurfaceConfig.create(bump={"amplitude": 0.5})
        assert config.create_bump(config.create_surface()) is None

    def test_explicit_anchor(self):
        """An explicit anchor yields an attached bump."""
        psi = math.pi - math.asin(0.6)
        config = SurfaceConfig.create(bump={"amplitude": 0.5, "anchor_theta": 0.0, "anchor_l": 3.4, "anchor_psi": psi})
        surface = config.create_surface()
        bump = config.create_bump(surface)
        assert surface.with_bump(bump).is_perturbed
        assert bump.shear == pytest.approx(0.8)

    def test_tolerance(self):
        """Tolerances flow into FlowTolerance."""
        tol = SurfaceConfig.create(tolerances={"rtol": 1e-8}).create_tolerance()
        assert tol.rtol == 1e-8 and tol.atol == 1e-12
