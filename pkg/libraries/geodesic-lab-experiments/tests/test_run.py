"""Tests for running experiments end to end."""
import json
from pathlib import Path
from tempfile import TemporaryDirectory

from geodesic_lab_checks import CheckCategory, CheckSuite
from geodesic_lab_core.exceptions import SeparatrixError
from geodesic_lab_core.executor import Task
from geodesic_lab_experiments.artifacts import ArtifactWriter
from geodesic_lab_experiments.config import ExperimentConfig, load_preset
from geodesic_lab_experiments.run import run_experiment
from geodesic_lab_experiments.runners import (
    ExperimentContext,
    comparison_horizon,
    run_front,
    run_integral,
    sphere_integral_count,
)
from geodesic_lab_geometry.config import SurfaceConfig


def _lost():
    raise SeparatrixError("trace left the separatrix")


def _fine():
    return 1.0


class TestExperimentContext:
    """Test ExperimentContext."""

    def test_failing_task_keeps_siblings(self):
        """A failing task becomes an error check; the others still complete."""
        with TemporaryDirectory() as tmpdir:
            ctx = ExperimentContext(ExperimentConfig.create("splitting", threads=2),
                                    CheckSuite("splitting"), ArtifactWriter(Path(tmpdir)))
            outcomes = ctx.run_tasks([Task("lost", _lost), Task("fine", _fine)], CheckCategory.HOMOCLINIC)
            assert [o.ok for o in outcomes] == [False, True]
            assert outcomes[1].result == 1.0
            [check] = ctx.suite.checks
            assert check.name == "task/lost"
            assert check.result.value == "error"
            assert check.context["error_code"] == "HOMOCLINIC_500"
            assert ctx.tasks[0] == {"name": "lost", "ok": False, "error_code": "HOMOCLINIC_500"}

    def test_seed_streams(self):
        """Streams of one seed are reproducible and independent."""
        with TemporaryDirectory() as tmpdir:
            ctx = ExperimentContext(ExperimentConfig.create("count", seed=7),
                                    CheckSuite("count"), ArtifactWriter(Path(tmpdir)))
            assert ctx.rng(0).random() == ctx.rng(0).random()
            assert ctx.rng(0).random() != ctx.rng(1).random()

    def test_default_family(self):
        """Without configured d values the family doubles from d."""
        with TemporaryDirectory() as tmpdir:
            ctx = ExperimentContext(ExperimentConfig.create("returnmap"),
                                    CheckSuite("returnmap"), ArtifactWriter(Path(tmpdir)))
            assert ctx.d_values == (20.0, 40.0, 80.0, 160.0)


class TestSphereIntegral:
    """Test the closed-form sphere count."""

    def test_values(self):
        """Before the first conjugate point the count is the area of a cap."""
        assert abs(sphere_integral_count(0.0)) < 1e-12
        assert abs(sphere_integral_count(3.141592653589793) - 4 * 3.141592653589793) < 1e-12


class TestComparisonHorizon:
    """Test the horizon of the exponent comparison."""

    def test_orbits_reach_the_turns(self):
        """Past the threshold length the horizon covers several round trips of the doubled cylinder."""
        horizon = comparison_horizon(200.0, 176.0, 5.0, 3)
        assert horizon == 3 * (4 * 176.0 + 2 * 5.0)
        assert horizon > 3 * 2 * (2 * 176.0)

    def test_short_cylinder_keeps_T(self):
        """A short cylinder keeps the configured T."""
        assert comparison_horizon(200.0, 1.0, 1.0, 3) == 200.0


def _sphere_context(experiment: str, tmpdir: str, **params) -> ExperimentContext:
    config = ExperimentConfig.create(experiment, surface=SurfaceConfig(kind="round-sphere"), params=params)
    return ExperimentContext(config, CheckSuite(experiment), ArtifactWriter(Path(tmpdir)))


class TestSphereRunners:
    """Test the integral and front runners on the round sphere."""

    def test_monte_carlo_band_is_not_widened(self):
        """Agreement is judged against the relative band only; an unresolved band fails its own check."""
        with TemporaryDirectory() as tmpdir:
            ctx = _sphere_context("integral", tmpdir, p_l=1.0, T_values=[1.0], monte_carlo_T=[2.0], n_dirs=32,
                                  n_q=50, mc_dirs=64, mc_max_q=100, series_T_max=10.0, series_points=10)
            run_integral(ctx)
            checks = {c.name: c for c in ctx.suite.checks}
            match = checks["monte_carlo_matches_jacobi_T2"]
            assert abs(match.bound - 0.02 * sphere_integral_count(2.0)) < 1e-3
            resolves = checks["monte_carlo_resolves_band_T2"]
            assert resolves.context["samples"] == 100
            assert not resolves.passed

    def test_front_checks(self):
        """Quadrature and polygonal lengths agree and the growth slopes are ordered."""
        with TemporaryDirectory() as tmpdir:
            ctx = _sphere_context("front", tmpdir, p_l=1.0, T_values=[1.0], n_dirs=32, initial_dirs=32,
                                  series_T_max=10.0, series_points=10)
            run_front(ctx)
            checks = {c.name: c for c in ctx.suite.checks}
            assert checks["front_quadrature_vs_polygonal_T1"].passed
            assert checks["count_slope_within_front_slope"].passed
            assert checks["front_slope_within_bound_slope"].passed
            assert "pole_front_periodic" not in checks
            assert (Path(tmpdir) / "front_series.csv").exists()


class TestRunExperiment:
    """Test run_experiment."""

    def test_check_surface_on_sphere(self):
        """The round sphere passes its surface invariants and writes a bundle."""
        with TemporaryDirectory() as tmpdir:
            config = load_preset("round-sphere", {"experiment": "check-surface"})
            result = run_experiment(config, Path(tmpdir) / "run")
            assert result.passed
            for name in ("surface.csv", "summary.json", "checks.jsonl", "metrics.json", "manifest.json"):
                assert (result.out_dir / name).exists()
            summary = json.loads((result.out_dir / "summary.json").read_text())
            assert summary["config_hash"] == config.config_hash
            assert summary["counts"]["fail"] == 0

    def test_summary_is_reproducible(self):
        """Two runs with the same configuration write identical summaries."""
        with TemporaryDirectory() as tmpdir:
            config = load_preset("round-sphere", {"experiment": "check-surface"})
            a = run_experiment(config, Path(tmpdir) / "a")
            b = run_experiment(config, Path(tmpdir) / "b")
            assert (a.out_dir / "summary.json").read_bytes() == (b.out_dir / "summary.json").read_bytes()
