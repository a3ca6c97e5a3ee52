"""Unit tests for experiment configuration."""
from pathlib import Path
from tempfile import TemporaryDirectory

import pytest

from geodesic_lab_core.exceptions import ConfigValidationError
from geodesic_lab_experiments.config import (
    EXPERIMENT_DEFAULTS,
    ExperimentConfig,
    load_config,
    load_preset,
    parse_config,
)


def _errors(text, **overrides):
    with pytest.raises(ConfigValidationError) as info:
        parse_config(text, overrides=overrides or None)
    return info.value.errors


def _keys(errors):
    return [e["key"] for e in errors]


class TestParseConfig:
    """Test parsing and validation."""

    def test_minimal_file_fills_defaults(self):
        """A file naming only the experiment gets every default."""
        config = parse_config("experiment: trace\n")
        assert config.experiment == "trace"
        assert config.surface.kind == "dumbbell"
        assert config.surface.d == 20.0
        assert config.params == EXPERIMENT_DEFAULTS["trace"]
        assert config.threads == 1

    def test_negative_d(self):
        """d = -1 is reported with its key and line."""
        errors = _errors("experiment: trace\nsurface:\n  d: -1\n")
        assert errors == [{"key": "surface.d", "line": 3, "message": "d must be positive"}]

    def test_unknown_keys(self):
        """Unknown keys are errors, at any depth."""
        errors = _errors("experiment: trace\nbogus: 1\nprofile:\n  radius: 2.0\n")
        assert _keys(errors) == ["bogus", "profile.radius"]
        assert errors[0]["line"] == 2

    def test_all_errors_at_once(self):
        """Every error of a file is reported together."""
        errors = _errors("experiment: trace\nthreads: 0\nsurface:\n  d: -1\ntolerances:\n  method: Euler\n")
        assert set(_keys(errors)) == {"threads", "surface.d", "tolerances.method"}

    def test_indefinite_metric(self):
        """A bump amplitude that breaks positive-definiteness is rejected."""
        errors = _errors("experiment: check-surface\nbump:\n  amplitude: 1000.0\n")
        assert _keys(errors) == ["bump.amplitude"]
        assert "positive-definite" in errors[0]["message"]

    def test_monte_carlo_needs_seed(self):
        """Random experiments need a seed."""
        assert _keys(_errors("experiment: count\n")) == ["seed"]
        assert parse_config("experiment: count\nseed: 3\n").seed == 3

    def test_experiment_section(self):
        """The section named after the experiment is type-checked against its defaults."""
        config = parse_config("experiment: count\nseed: 1\ncount:\n  pairs: 5\n  T_values: [1.0, 2.0]\n")
        assert config.params["pairs"] == 5
        assert config.params["n_dirs"] == 256
        errors = _errors("experiment: count\nseed: 1\ncount:\n  pairs: many\n  spread: 2\n")
        assert _keys(errors) == ["count.pairs", "count.spread"]

    def test_other_experiment_section(self):
        """Sections of other experiments are unknown keys."""
        assert _keys(_errors("experiment: trace\ncount:\n  pairs: 3\n")) == ["count"]

    def test_yaml_syntax_error(self):
        """Broken YAML reports a line."""
        errors = _errors("experiment: trace\nsurface: [d\n")
        assert errors[0]["line"] is not None
        assert errors[0]["message"].startswith("invalid YAML")

    def test_dumbbell_only_experiments(self):
        """Section-map experiments need a dumbbell; splitting needs a bump."""
        errors = _errors("experiment: splitting\nsurface:\n  kind: round-sphere\n")
        assert set(_keys(errors)) == {"surface.kind", "bump.amplitude"}

    def test_d_values_increasing(self):
        """The d family must be positive and increasing."""
        errors = _errors("experiment: returnmap\nfamily:\n  d_values: [40.0, 20.0]\n")
        assert errors[0]["key"] == "family.d_values"

    def test_overrides(self):
        """Command-line values replace the file's, and must agree on the experiment."""
        config = parse_config("experiment: trace\nseed: 1\n", overrides={"seed": 9, "threads": 4})
        assert (config.seed, config.threads) == (9, 4)
        assert _keys(_errors("experiment: trace\n", experiment="count", seed=1)) == ["experiment"]

    def test_load_config(self):
        """Configurations load from files."""
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "trace.yaml"
            path.write_text("experiment: trace\ntrace:\n  T: 5.0\n")
            config = load_config(path)
            assert config.params["T"] == 5.0
            assert config.source == str(path)


class TestExperimentConfig:
    """Test ExperimentConfig."""

    def test_presets(self):
        """The presets validate for their experiments."""
        config = load_preset("figure1-default", {"experiment": "headline"})
        assert config.seed == 0
        assert config.d_values == (20.0, 40.0, 80.0, 160.0)
        assert config.surface.bump.amplitude == 0.05
        assert load_preset("round-sphere", {"experiment": "count"}).surface.kind == "round-sphere"

    def test_unknown_preset(self):
        """Unknown presets are configuration errors."""
        with pytest.raises(ConfigValidationError):
            load_preset("torus", {"experiment": "trace"})

    def test_hash_is_stable(self):
        """The hash depends on the numbers only."""
        a = parse_config("experiment: trace\nseed: 1\n")
        b = parse_config("experiment: trace\nseed: 1\nthreads: 8\noutput: elsewhere\n")
        c = parse_config("experiment: trace\nseed: 2\n")
        assert a.config_hash == b.config_hash
        assert a.config_hash != c.config_hash

    def test_create_and_overrides(self):
        """create fills defaults and with_overrides replaces run settings."""
        config = ExperimentConfig.create("front", params={"T_values": [1.0]})
        assert config.params["refine_tol"] == 0.05
        assert config.with_overrides(seed=5, output="out").output_dir == Path("out")
        with pytest.raises(ValueError):
            ExperimentConfig.create("plot")
