"""Experiment configuration: YAML parsing, validation and presets.

A configuration file is validated completely before anything is computed;
every problem is reported with its dotted key path and line number.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from geodesic_lab_core.exceptions import BumpConfigurationError, ConfigValidationError, LabException
from geodesic_lab_geometry.bump import PerturbationBump
from geodesic_lab_geometry.config import SURFACE_KINDS, BumpSettings, SurfaceConfig
from geodesic_lab_geometry.surface import RegionParams

from .artifacts import stable_hash

logger = logging.getLogger(__name__)

EXPERIMENTS = (
    "check-surface",
    "trace",
    "count",
    "integral",
    "front",
    "returnmap",
    "circle",
    "lyapunov",
    "splitting",
    "headline",
)

# experiments drawing random samples
MONTE_CARLO = frozenset({"count", "integral", "headline"})
DUMBBELL_ONLY = frozenset({"returnmap", "circle", "lyapunov", "splitting", "headline"})

INTEGRATOR_METHODS = ("RK45", "RK23", "DOP853", "Radau", "BDF", "LSODA")

EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "check-surface": {
        "table_points": 1001,
        "curvature_points": 9,
        "curvature_tol": 1e-4,
        "meridians": 3,
        "meridian_tol": 1e-6,
    },
    "trace": {
        "theta": 0.0,
        "l": None,
        "phi": 0.3,
        "heading": 1,
        "T": 50.0,
        "sample_step": 0.05,
        "perturbed": False,
        "clairaut_tol": 1e-8,
        "reversal_tol": 1e-6,
    },
    "count": {
        "pairs": 50,
        "T_values": [math.pi, 3 * math.pi, 5 * math.pi, 10 * math.pi],
        "n_dirs": 256,
    },
    "integral": {
        "p_theta": 0.0,
        "p_l": None,
        "T_values": [math.pi],
        "n_dirs": 256,
        "exact_rel_tol": 1e-3,
        "monte_carlo_T": [5.0, 10.0, 20.0],
        "n_q": 400,
        "mc_dirs": 256,
        "mc_max_q": 6400,
        "mc_rel_tol": 0.02,
        "series_T_max": 60.0,
        "series_points": 30,
        "linear_slope_max": 0.05,
    },
    "front": {
        "p_theta": 0.0,
        "p_l": None,
        "T_values": [1.0, 5.0, 20.0],
        "refine_tol": 0.05,
        "initial_dirs": 64,
        "budget": 20000,
        "n_dirs": 256,
        "sphere_tol": 1e-4,
        "series_T_max": 20.0,
        "series_points": 20,
        "period_T": 5.0,
        "period_tol": 0.01,
    },
    "returnmap": {
        "grid": 32,
        "phi_max": 1.2,
        "advance_tol": 1e-6,
        "turn_tol": 1e-8,
        "area_points": 5,
        "area_tol": 1e-5,
        "scaling_grid": 64,
    },
    "circle": {
        "n_iter": 10000,
        "n_seeds": 12,
        "surrogate_theta": 256,
        "surrogate_phi": 17,
        "classify_T": 200.0,
    },
    "lyapunov": {
        "epsilons": [0.5, 0.25],
        "T": 200.0,
        "grid_theta": 10,
        "grid_phi": 10,
        "w1_fraction": 0.5,
        "sojourn_phi": 9,
        "threshold_margin": 1.1,
        "t0_rel_tol": 0.01,
        "min_passes": 3,
    },
    "splitting": {
        "fractions": [1.0, 0.5, 0.25],
        "seed_distance": 1e-4,
        "zero_gap_tol": 1e-7,
        "significance": 100.0,
        "linear_tol": 0.1,
        "deviation_tol": 1e-6,
        "cross_tol": 1e-6,
        "rate_rel_tol": 0.05,
    },
    "headline": {
        "pole_offsets": [0.05, 0.1],
        "pole_thetas": 2,
        "neck_points": 2,
        "T_max": 60.0,
        "T_points": 30,
        "n_dirs": 128,
        "n_boot": 1000,
        "confidence": 0.95,
        "tangle_states": 8,
        "tangle_offset": 1e-3,
        "epsilon": 0.5,
    },
}

_TOP_KEYS = ("experiment", "seed", "threads", "output", "surface", "profile", "bump", "family", "tolerances")

_SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "surface": ("kind", "d"),
    "profile": tuple(f.name for f in fields(RegionParams)) + ("cap_length",),
    "bump": tuple(f.name for f in fields(BumpSettings)),
    "family": ("d_values",),
    "tolerances": ("rtol", "atol", "method"),
}

_NULLABLE = frozenset({
    "profile.bulb_curvature",
    "profile.cap_length",
    "bump.anchor_theta",
    "bump.anchor_l",
    "bump.anchor_psi",
})

_POSITIVE = frozenset({
    "surface.d",
    "profile.bulb_radius",
    "profile.bulb_position",
    "profile.neck_radius",
    "profile.neck_curvature",
    "profile.band_radius",
    "profile.band_half_width",
    "profile.rho",
    "profile.piece_length",
    "profile.cap_length",
    "bump.delta_t",
    "bump.delta_x",
    "bump.box_factor",
    "tolerances.rtol",
    "tolerances.atol",
})

# experiment parameters that must be > 0 (integers are always >= 1)
_POSITIVE_PARAMS = frozenset({
    "T",
    "T_max",
    "series_T_max",
    "period_T",
    "sample_step",
    "refine_tol",
    "seed_distance",
    "significance",
    "threshold_margin",
    "w1_fraction",
    "epsilon",
    "phi_max",
    "tangle_offset",
    "confidence",
    "classify_T",
})


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _line_index(node: Optional[yaml.Node], prefix: str = "", index: Optional[Dict[str, int]] = None) -> Dict[str, int]:
    """Map dotted key paths to 1-based line numbers."""
    index = {} if index is None else index
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
            index[path] = key_node.start_mark.line + 1
            _line_index(value_node, path, index)
    return index


class _Errors:
    def __init__(self, lines: Mapping[str, int]):
        self.lines = lines
        self.items: List[Dict[str, Any]] = []

    def _line(self, key: Optional[str]) -> Optional[int]:
        while key:
            if key in self.lines:
                return self.lines[key]
            key = key.rpartition(".")[0]
        return None

    def add(self, key: Optional[str], message: str) -> None:
        self.items.append({"key": key, "line": self._line(key), "message": message})


def _check_value(path: str, value: Any) -> Optional[str]:
    if value is None:
        return None if path in _NULLABLE else "must not be null"
    if path == "surface.kind":
        return None if value in SURFACE_KINDS else f"unknown surface kind {value!r}; expected one of {', '.join(SURFACE_KINDS)}"
    if path == "tolerances.method":
        return None if value in INTEGRATOR_METHODS else f"unknown method {value!r}; expected one of {', '.join(INTEGRATOR_METHODS)}"
    if path == "family.d_values":
        if not isinstance(value, list) or not value or not all(_is_number(v) for v in value):
            return "must be a non-empty list of numbers"
        if any(v <= 0 for v in value):
            return "d must be positive"
        if any(b <= a for a, b in zip(value, value[1:])):
            return "must be strictly increasing"
        return None
    if not _is_number(value):
        return "must be a number"
    if path == "surface.d" and value <= 0:
        return "d must be positive"
    if path in _POSITIVE and value <= 0:
        return "must be positive"
    return None


def _section(data: Mapping[str, Any], name: str, errors: _Errors) -> Dict[str, Any]:
    raw = data.get(name)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        errors.add(name, "must be a mapping")
        return {}
    clean: Dict[str, Any] = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in _SECTION_KEYS[name]:
            errors.add(path, "unknown key")
            continue
        message = _check_value(path, value)
        if message:
            errors.add(path, message)
        else:
            clean[key] = value
    return clean


def _check_param(name: str, default: Any, value: Any) -> Optional[str]:
    if isinstance(default, bool):
        return None if isinstance(value, bool) else "must be true or false"
    if name == "heading":
        return None if value in (1, -1) and _is_int(value) else "must be 1 or -1"
    if _is_int(default):
        return None if _is_int(value) and value >= 1 else "must be a positive integer"
    if isinstance(default, list):
        if not isinstance(value, list) or not value or not all(_is_number(v) and v > 0 for v in value):
            return "must be a non-empty list of positive numbers"
        return None
    if value is None:
        return None if default is None else "must not be null"
    if not _is_number(value):
        return "must be a number"
    if (name in _POSITIVE_PARAMS or name.endswith("_tol")) and value <= 0:
        return "must be positive"
    return None


def _separatrix_shear(profile: Mapping[str, Any]) -> float:
    """|cos psi| of the separatrix on the band, where r sin psi = r0."""
    r0 = profile.get("neck_radius", RegionParams.neck_radius)
    r1 = profile.get("band_radius", RegionParams.band_radius)
    ratio = min(r0 / r1, 1.0)
    return math.sqrt(1.0 - ratio * ratio)


def _check_bump(profile: Mapping[str, Any], bump: Mapping[str, Any], errors: _Errors) -> None:
    settings = BumpSettings(**bump)
    if settings.has_explicit_anchor:
        shear = abs(math.cos(settings.anchor_psi))
    else:
        shear = _separatrix_shear(profile)
    try:
        PerturbationBump(settings.amplitude, settings.delta_t, settings.delta_x, shear,
                         box_factor=settings.box_factor)
    except BumpConfigurationError as e:
        reason = e.details.get("reason", e.message)
        key = "bump.amplitude" if "positive-definite" in reason else "bump"
        errors.add(key, reason)


@dataclass
class ExperimentConfig:
    """Validated configuration of one experiment run."""

    experiment: str
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    d_values: Tuple[float, ...] = ()
    params: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    threads: int = 1
    output: Optional[str] = None
    source: Optional[str] = None

    @classmethod
    def create(
        cls,
        experiment: str,
        surface: Optional[SurfaceConfig] = None,
        d_values: Tuple[float, ...] = (),
        params: Optional[Dict[str, Any]] = None,
        seed: Optional[int] = None,
        threads: int = 1,
        output: Optional[str] = None,
        source: Optional[str] = None,
    ) -> "ExperimentConfig":
        """Create a config, filling experiment parameters with their defaults."""
        if experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {experiment!r}")
        merged = {k: (list(v) if isinstance(v, list) else v) for k, v in EXPERIMENT_DEFAULTS[experiment].items()}
        merged.update(params or {})
        return cls(
            experiment=experiment,
            surface=surface or SurfaceConfig(),
            d_values=tuple(float(d) for d in d_values),
            params=merged,
            seed=seed,
            threads=threads,
            output=output,
            source=source,
        )

    @property
    def monte_carlo(self) -> bool:
        return self.experiment in MONTE_CARLO

    @property
    def output_dir(self) -> Path:
        return Path(self.output) if self.output else Path("runs") / self.experiment

    def with_overrides(self, seed: Optional[int] = None, threads: Optional[int] = None,
                       output: Optional[str] = None) -> "ExperimentConfig":
        return replace(
            self,
            seed=self.seed if seed is None else seed,
            threads=self.threads if threads is None else threads,
            output=self.output if output is None else output,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Everything that determines the numbers; output location and threads excluded."""
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "surface": self.surface.to_dict(),
            "d_values": list(self.d_values),
            "params": dict(self.params),
        }

    @property
    def config_hash(self) -> str:
        return stable_hash(self.to_dict())


def parse_config(
    text: str,
    source: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Parse and validate a YAML experiment configuration.

    Args:
        text: YAML document
        source: Where the text came from, for messages
        overrides: Top-level values (experiment, seed, threads, output) that
            replace the file's; None values are ignored

    Raises:
        ConfigValidationError: With every error found
    """
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigValidationError(
            [{"key": None, "line": mark.line + 1 if mark else None, "message": f"invalid YAML: {problem}"}],
            details={"source": source},
        )
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigValidationError([{"key": None, "line": 1, "message": "top level must be a mapping"}],
                                    details={"source": source})

    errors = _Errors(_line_index(root))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    experiment = overrides.get("experiment", data.get("experiment"))
    if "experiment" in overrides and "experiment" in data and data["experiment"] != overrides["experiment"]:
        errors.add("experiment", f"file configures {data['experiment']!r}, not {overrides['experiment']!r}")
    if experiment is None:
        errors.add("experiment", "experiment is required")
    elif experiment not in EXPERIMENTS:
        errors.add("experiment", f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        experiment = None

    for key in data:
        if key not in _TOP_KEYS and key != experiment:
            errors.add(str(key), "unknown key")

    merged = {**data, **{k: v for k, v in overrides.items() if k != "experiment"}}
    seed = merged.get("seed")
    if seed is not None and not (_is_int(seed) and seed >= 0):
        errors.add("seed", "seed must be a non-negative integer")
    if experiment in MONTE_CARLO and seed is None:
        errors.add("seed", f"experiment {experiment} samples at random; a seed is required")
    threads = merged.get("threads", 1)
    if not (_is_int(threads) and threads >= 1):
        errors.add("threads", "threads must be a positive integer")
    output = merged.get("output")
    if output is not None and not isinstance(output, (str, Path)):
        errors.add("output", "output must be a path")

    sections = {name: _section(data, name, errors) for name in _SECTION_KEYS}

    params: Dict[str, Any] = {}
    if experiment is not None:
        defaults = EXPERIMENT_DEFAULTS[experiment]
        raw = data.get(experiment)
        if raw is not None and not isinstance(raw, dict):
            errors.add(experiment, "must be a mapping")
        elif raw:
            for key, value in raw.items():
                path = f"{experiment}.{key}"
                if key not in defaults:
                    errors.add(path, "unknown key")
                    continue
                message = _check_param(str(key), defaults[key], value)
                if message:
                    errors.add(path, message)
                else:
                    params[key] = value

    kind = sections["surface"].get("kind", "dumbbell")
    if experiment in DUMBBELL_ONLY and kind != "dumbbell":
        errors.add("surface.kind", f"experiment {experiment} needs a dumbbell surface")
    amplitude = sections["bump"].get("amplitude", 0.0)
    if experiment == "splitting" and amplitude == 0.0:
        errors.add("bump.amplitude", "splitting needs a nonzero bump amplitude")
    if kind == "dumbbell":
        _check_bump(sections["profile"], sections["bump"], errors)

    surface: Optional[SurfaceConfig] = None
    if not errors.items:
        surface = SurfaceConfig.create(
            kind=kind,
            d=float(sections["surface"].get("d", 20.0)),
            profile=sections["profile"],
            bump=sections["bump"],
            tolerances=sections["tolerances"],
        )
        if kind == "dumbbell":
            try:
                surface.create_surface()
            except LabException as e:
                errors.add("profile", e.message)

    if errors.items:
        raise ConfigValidationError(errors.items, details={"source": source})

    config = ExperimentConfig.create(
        experiment=experiment,
        surface=surface,
        d_values=tuple(sections["family"].get("d_values", ())),
        params=params,
        seed=seed,
        threads=threads,
        output=str(output) if output is not None else None,
        source=source,
    )
    logger.debug(f"parsed {experiment} config from {source or '<text>'} (hash {config.config_hash[:12]})")
    return config


def load_config(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Load and validate a YAML configuration file."""
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path), overrides=overrides)


PRESETS: Dict[str, str] = {
    "figure1-default": """\
seed: 0
surface:
  kind: dumbbell
  d: 20.0
profile:
  bulb_radius: 0.9
  bulb_position: 0.9
  neck_radius: 0.6
  neck_curvature: 0.5
  band_radius: 1.0
  band_half_width: 0.5
  rho: 0.8
  piece_length: 1.0
bump:
  amplitude: 0.05
  delta_t: 0.2
  delta_x: 0.1
  box_factor: 1.2
family:
  d_values: [20.0, 40.0, 80.0, 160.0]
tolerances:
  rtol: 1.0e-10
  atol: 1.0e-12
  method: DOP853
""",
    "round-sphere": """\
seed: 0
surface:
  kind: round-sphere
tolerances:
  rtol: 1.0e-10
  atol: 1.0e-12
  method: DOP853
""",
}


def load_preset(name: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Validate a named preset; ``overrides`` must name the experiment."""
    if name not in PRESETS:
        raise ConfigValidationError([{"key": None, "line": None,
                                      "message": f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}"}])
    return parse_config(PRESETS[name], source=f"preset:{name}", overrides=overrides)


__all__ = [
    "EXPERIMENTS",
    "MONTE_CARLO",
    "DUMBBELL_ONLY",
    "EXPERIMENT_DEFAULTS",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "PRESETS",
    "load_preset",
]
