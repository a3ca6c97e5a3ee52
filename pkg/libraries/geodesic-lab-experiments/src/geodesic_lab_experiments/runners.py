"""Experiment runners.

Each runner takes an :class:`ExperimentContext`, computes through the
geometry and dynamics libraries, records invariant checks on the context's
suite and writes its tables through the artifact writer. Independent pieces
of work go through the task executor so that one failing task is recorded
without aborting its siblings.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from geodesic_lab_checks import CheckCategory, CheckSuite
from geodesic_lab_core.executor import Task, TaskOutcome, run_tasks
from geodesic_lab_core.observability import ErrorTracker, MetricsCollector
from geodesic_lab_dynamics.counting import (
    FrontSeries,
    GrowthFit,
    SurfacePoint,
    count_segments,
    front_length,
    front_length_bound,
    front_series,
    great_circle_distance,
    great_circle_lengths,
    growth_rate,
    integral_count,
    integral_count_series,
    monte_carlo_count,
    sample_area_points,
    volume_bound,
)
from geodesic_lab_dynamics.homoclinic import (
    CLAIRAUT_DRIFT,
    anchor_state,
    linear_response_spread,
    place_bump,
    separatrix_deviation,
    splitting_gap,
    trace_separatrix,
)
from geodesic_lab_dynamics.sections import (
    ReturnMap,
    SectionPoint,
    SurrogateTurn,
    area_jacobian,
    classify_side,
    detect_invariant_circle,
    measure_d0,
    measure_phi0,
    measure_sojourn,
    numeric_transit,
    psi_cylinder,
    scaling_distance,
    tabulate_transit,
)
from geodesic_lab_geometry.bump import PerturbationBump, brioschi_curvature_fd
from geodesic_lab_geometry.flow import FlowTolerance, integrate_geodesic
from geodesic_lab_geometry.lyapunov import (
    LyapunovBoundParams,
    finite_time_exponent,
    hyperbolic_rate,
    measure_curvature_bound,
    threshold_length,
)
from geodesic_lab_geometry.states import TWO_PI, GeodesicState, wrap_angle
from geodesic_lab_geometry.surface import ProfileSurface

from .artifacts import ArtifactWriter
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

# seed streams, one per random consumer
_PAIRS_STREAM = 0
_MONTE_CARLO_STREAM = 1
_BOOTSTRAP_STREAM = 2


@dataclass
class ExperimentContext:
    """Everything a runner needs: config, surfaces, checks, files and task execution."""

    config: ExperimentConfig
    suite: CheckSuite
    writer: ArtifactWriter
    metrics: Optional[MetricsCollector] = None
    error_tracker: Optional[ErrorTracker] = None
    results: Dict[str, Any] = field(default_factory=dict)
    tasks: List[Dict[str, Any]] = field(default_factory=list)
    _surfaces: Dict[float, ProfileSurface] = field(default_factory=dict, repr=False)

    @property
    def params(self) -> Dict[str, Any]:
        return self.config.params

    @cached_property
    def tolerance(self) -> FlowTolerance:
        return self.config.surface.create_tolerance()

    @cached_property
    def base_surface(self) -> ProfileSurface:
        """Unperturbed surface at the configured d."""
        return self.config.surface.create_surface()

    @property
    def is_dumbbell(self) -> bool:
        return self.base_surface.is_dumbbell

    @cached_property
    def bump(self) -> Optional[PerturbationBump]:
        """Explicitly anchored bump, else one placed on the separatrix when the amplitude is nonzero."""
        cfg = self.config.surface
        if not self.is_dumbbell:
            return None
        explicit = cfg.create_bump(self.base_surface)
        if explicit is not None:
            return explicit
        settings = cfg.bump
        if settings.amplitude == 0.0:
            return None
        return place_bump(self.base_surface, settings.amplitude, settings.delta_t, settings.delta_x,
                          settings.box_factor, tol=self.tolerance)

    def surface_at(self, d: Optional[float] = None) -> ProfileSurface:
        """Unperturbed surface with cylinder length d."""
        if d is None or not self.is_dumbbell or d == self.config.surface.d:
            return self.base_surface
        if d not in self._surfaces:
            self._surfaces[d] = self.config.surface.with_d(d).create_surface()
        return self._surfaces[d]

    def surface(self, d: Optional[float] = None) -> ProfileSurface:
        """Surface with cylinder length d, carrying the bump if there is one."""
        base = self.surface_at(d)
        return base.with_bump(self.bump) if self.bump is not None else base

    @property
    def default_l(self) -> float:
        lm = self.base_surface.landmarks
        return lm.l1 if lm is not None else 1.0

    @property
    def d_values(self) -> Tuple[float, ...]:
        d = self.config.surface.d
        return self.config.d_values or (d, 2 * d, 4 * d, 8 * d)

    def seed_sequences(self, stream: int, n: int) -> List[np.random.SeedSequence]:
        """n independent child seeds of the run seed for one consumer."""
        root = np.random.SeedSequence(self.config.seed or 0, spawn_key=(stream,))
        return root.spawn(n)

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequences(stream, 1)[0])

    def run_tasks(self, tasks: Sequence[Task], category: CheckCategory) -> List[TaskOutcome]:
        """Run tasks on the configured threads; failures become error checks."""
        outcomes = run_tasks(tasks, threads=self.config.threads, metrics_collector=self.metrics,
                             error_tracker=self.error_tracker)
        for outcome in outcomes:
            self.tasks.append({"name": outcome.name, "ok": outcome.ok, "error_code": outcome.error_code})
            if not outcome.ok:
                self.suite.failed_task(outcome, category)
        return outcomes


def _ok(outcomes: Sequence[TaskOutcome]) -> List[TaskOutcome]:
    return [o for o in outcomes if o.ok]


# ==========================================================================
# check-surface
# ==========================================================================


def _meridian_deviation(surface: ProfileSurface, theta: float, l_start: float, length: float,
                        tol: FlowTolerance) -> float:
    ts = np.linspace(0.0, length, 401)
    traj = integrate_geodesic(surface, GeodesicState(theta, l_start, 0.0), length, tol,
                              t_eval=ts, record_levels=False)
    drift = np.abs([wrap_angle(float(t) - theta) for t in traj.theta])
    return float(max(np.max(drift), np.max(np.abs(np.sin(traj.psi)))))


def run_check_surface(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface()
    ctx.suite.from_outcomes(surface.check_invariants(), CheckCategory.SURFACE)
    ctx.writer.write_columns("surface.csv", surface.sample_table(p["table_points"]))
    ctx.results["surface"] = surface.describe()

    bump = surface.bump if surface.is_perturbed else None
    if bump is None:
        return

    def metric(t: float, x: float) -> Tuple[float, float, float]:
        return bump.metric(t, x).as_tuple()

    rows = []
    for t in np.linspace(-bump.delta_t, bump.delta_t, p["curvature_points"] + 2)[1:-1]:
        exact = bump.curvature_on_axis(float(t))
        fd = brioschi_curvature_fd(metric, float(t), 0.0)
        rows.append({"t": float(t), "curvature": exact, "brioschi": fd, "difference": abs(exact - fd)})
    ctx.writer.write_csv("bump_curvature.csv", rows)
    ctx.suite.compare("bump_curvature_matches_brioschi", CheckCategory.SURFACE,
                      max(r["difference"] for r in rows), "<=", p["curvature_tol"])

    lm = surface.landmarks
    band_lo, band_hi = lm.band
    thetas = [bump.from_chart(float(t), 0.0)[0]
              for t in np.linspace(-0.8 * bump.delta_t, 0.8 * bump.delta_t, p["meridians"])]
    tasks = [
        Task(f"meridian_{k}", _meridian_deviation,
             (surface, theta, band_lo + 0.01, band_hi - band_lo - 0.02, ctx.tolerance))
        for k, theta in enumerate(thetas)
    ]
    for outcome in _ok(ctx.run_tasks(tasks, CheckCategory.SURFACE)):
        ctx.suite.compare(f"{outcome.name}_stays_geodesic", CheckCategory.SURFACE,
                          outcome.result, "<=", p["meridian_tol"])


# ==========================================================================
# trace
# ==========================================================================


def run_trace(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface() if p["perturbed"] else ctx.base_surface
    l = p["l"] if p["l"] is not None else ctx.default_l
    v0 = GeodesicState(p["theta"], l, p["phi"], 0.0, p["heading"])
    T = p["T"]
    ts = np.append(np.arange(0.0, T, p["sample_step"]), T)
    traj = integrate_geodesic(surface, v0, T, ctx.tolerance, t_eval=ts)
    ctx.writer.write_csv("trajectory.csv", traj.to_rows())
    ctx.writer.write_csv("events.csv", [e.to_dict() for e in traj.events],
                         columns=["type", "time", "section", "theta", "l", "phi", "heading"])
    ctx.results["trace"] = {
        "start": v0.to_dict(),
        "end": traj.end.to_dict(),
        "events": len(traj.events),
        "sections": [e.section for e in traj.section_events()],
    }

    if not surface.is_perturbed:
        c = traj.clairaut_values()
        ctx.suite.compare("clairaut_conserved", CheckCategory.FLOW,
                          float(np.max(np.abs(c - c[0]))), "<=", p["clairaut_tol"])

    back = integrate_geodesic(surface, traj.end.flip().with_time(0.0), T, ctx.tolerance, record_levels=False)
    end = back.end.flip()
    error = float(surface.chart_distance(end.theta, end.l, v0.theta, v0.l)) + abs(wrap_angle(end.psi - v0.psi))
    ctx.suite.compare("time_reversal", CheckCategory.FLOW, error, "<=", p["reversal_tol"])


# ==========================================================================
# count
# ==========================================================================


def _sample_pairs(ctx: ExperimentContext, surface: ProfileSurface, n: int,
                  margin: float = 0.05) -> List[Tuple[SurfacePoint, SurfacePoint]]:
    """Random pairs away from the poles, from each other and (on the sphere) from antipodes."""
    rng = ctx.rng(_PAIRS_STREAM)
    pairs: List[Tuple[SurfacePoint, SurfacePoint]] = []
    while len(pairs) < n:
        a, b = sample_area_points(surface, 2, rng)
        if min(a.l, b.l) < margin or max(a.l, b.l) > surface.length - margin:
            continue
        if not surface.is_dumbbell:
            dist = great_circle_distance(a, b)
            if dist < margin or dist > math.pi - margin:
                continue
        elif float(surface.chart_distance(a.theta, a.l, b.theta, b.l)) < margin:
            continue
        pairs.append((a, b))
    return pairs


def run_count(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface()
    times = sorted(p["T_values"])
    pairs = _sample_pairs(ctx, surface, p["pairs"])
    tasks = [Task(f"pair_{k}", count_segments, (surface, a, b, times[-1]),
                  {"n_dirs": p["n_dirs"], "tol": ctx.tolerance})
             for k, (a, b) in enumerate(pairs)]
    outcomes = ctx.run_tasks(tasks, CheckCategory.COUNTING)

    rows, growth_rows = [], []
    mismatches = 0
    decreasing = 0
    for k, (outcome, (a, b)) in enumerate(zip(outcomes, pairs)):
        if not outcome.ok:
            continue
        previous = -1
        for T in times:
            counted = outcome.result.up_to(T)
            row = {"pair": k, "p_theta": a.theta, "p_l": a.l, "q_theta": b.theta, "q_l": b.l,
                   "T": T, "count": counted.count, "conjugate": counted.conjugate}
            if not surface.is_dumbbell:
                expected = len(great_circle_lengths(a, b, T))
                row["expected"] = expected
                mismatches += int(counted.count != expected)
            decreasing += int(counted.count < previous)
            previous = counted.count
            rows.append(row)
        first, last = outcome.result.up_to(times[0]).count, outcome.result.up_to(times[-1]).count
        if len(times) > 1 and first > 0 and last > 0:
            growth_rows.append({"pair": k, "first": first, "last": last,
                                "growth": math.log(last / first) / (times[-1] - times[0])})
    columns = ["pair", "p_theta", "p_l", "q_theta", "q_l", "T", "count", "expected", "conjugate"]
    ctx.writer.write_csv("counts.csv", rows, columns=columns)
    ctx.results["count"] = {"pairs": len(pairs), "T_values": times, "rows": len(rows)}
    # per-q growth of n_T(p, q): only its empirical distribution is reported
    ctx.writer.write_csv("pair_growth.csv", growth_rows, columns=["pair", "first", "last", "growth"])
    if growth_rows:
        rates = [r["growth"] for r in growth_rows]
        ctx.results["count"]["growth_quantiles"] = dict(zip(("q10", "q50", "q90"), np.quantile(rates, [0.1, 0.5, 0.9])))

    if not surface.is_dumbbell:
        ctx.suite.compare("great_circle_counts", CheckCategory.COUNTING, mismatches, "==", 0)
    ctx.suite.compare("counts_nondecreasing_in_T", CheckCategory.COUNTING, decreasing, "==", 0)


# ==========================================================================
# integral
# ==========================================================================


def sphere_integral_count(T: float) -> float:
    """Integral of n_T(p, .) on the unit sphere: 2*pi times the integral of |sin t| over [0, T]."""
    k = math.floor(T / math.pi)
    return TWO_PI * (2 * k + 1.0 - math.cos(T - k * math.pi))


def _monte_carlo_vs_jacobi(surface: ProfileSurface, point: SurfacePoint, T: float, p: Dict[str, Any],
                           seed: np.random.SeedSequence, tol: FlowTolerance) -> Dict[str, float]:
    """Monte Carlo count sampled until three standard errors fit inside the agreement band."""
    exact = integral_count(surface, point, T, p["n_dirs"], tol)
    band = p["mc_rel_tol"] * exact.value
    mc = monte_carlo_count(surface, point, T, p["n_q"], p["mc_dirs"], np.random.default_rng(seed), tol,
                           target_stderr=band / 3.0, max_q=p["mc_max_q"])
    return {"T": T, "monte_carlo": mc.value, "stderr": mc.stderr, "samples": mc.samples, "jacobi": exact.value,
            "quadrature_error": exact.error, "band": band}


def run_integral(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface()
    point = SurfacePoint(p["p_theta"], p["p_l"] if p["p_l"] is not None else ctx.default_l)
    sphere = not surface.is_dumbbell

    tasks = [Task(f"integral_T{T:g}", integral_count, (surface, point, T, p["n_dirs"], ctx.tolerance))
             for T in p["T_values"]]
    seeds = ctx.seed_sequences(_MONTE_CARLO_STREAM, len(p["monte_carlo_T"]))
    tasks += [Task(f"monte_carlo_T{T:g}", _monte_carlo_vs_jacobi,
                   (surface, point, T, p, seed, ctx.tolerance))
              for T, seed in zip(p["monte_carlo_T"], seeds)]
    times = np.linspace(p["series_T_max"] / p["series_points"], p["series_T_max"], p["series_points"])
    tasks.append(Task("series", integral_count_series, (surface, point, times, p["n_dirs"], ctx.tolerance)))
    outcomes = {o.name: o for o in ctx.run_tasks(tasks, CheckCategory.COUNTING)}

    rows = []
    for T in p["T_values"]:
        outcome = outcomes[f"integral_T{T:g}"]
        if not outcome.ok:
            continue
        estimate = outcome.result
        row = estimate.to_dict()
        if sphere:
            exact = sphere_integral_count(T)
            row["closed_form"] = exact
            ctx.suite.compare(f"sphere_integral_T{T:g}", CheckCategory.COUNTING,
                              abs(estimate.value - exact) / exact, "<=", p["exact_rel_tol"])
        rows.append(row)
    ctx.writer.write_csv("integral.csv", rows, columns=["T", "value", "error", "n_dirs", "closed_form"])

    mc_rows = []
    for T in p["monte_carlo_T"]:
        outcome = outcomes[f"monte_carlo_T{T:g}"]
        if not outcome.ok:
            continue
        row = outcome.result
        mc_rows.append(row)
        ctx.suite.compare(f"monte_carlo_matches_jacobi_T{T:g}", CheckCategory.COUNTING,
                          abs(row["monte_carlo"] - row["jacobi"]), "<=", row["band"])
        ctx.suite.compare(f"monte_carlo_resolves_band_T{T:g}", CheckCategory.COUNTING,
                          3.0 * row["stderr"], "<=", row["band"], context={"samples": row["samples"]})
    ctx.writer.write_csv("monte_carlo.csv", mc_rows,
                         columns=["T", "monte_carlo", "stderr", "samples", "jacobi", "quadrature_error", "band"])

    series = outcomes["series"]
    if series.ok:
        ctx.writer.write_csv("integral_series.csv", series.result.to_rows())
        fit = growth_rate(series.result, seed=ctx.config.seed or 0)
        ctx.results["growth"] = fit.to_dict()
        if sphere:
            ctx.suite.compare("sphere_growth_is_linear", CheckCategory.GROWTH,
                              fit.slope, "<", p["linear_slope_max"])
    ctx.results["point"] = point.to_dict()


# ==========================================================================
# front
# ==========================================================================


def _front_task(surface: ProfileSurface, point: SurfacePoint, T: float, p: Dict[str, Any],
                tol: FlowTolerance) -> Dict[str, Any]:
    front = front_length(surface, point, T, p["refine_tol"], tol,
                         initial_dirs=p["initial_dirs"], budget=p["budget"])
    volume = volume_bound(surface, point, T, p["n_dirs"], tol)
    bound = front_length_bound(surface, point, T, p["n_dirs"], tol)
    return {"front": front, "volume": volume, "bound": bound}


def _front_growth(surface: ProfileSurface, point: SurfacePoint, times: np.ndarray, n_dirs: int,
                  tol: FlowTolerance, seed: int) -> Tuple[FrontSeries, Dict[str, GrowthFit]]:
    series = front_series(surface, point, times, n_dirs, tol)
    fits = {name: growth_rate(getattr(series, name), seed=seed) for name in ("count", "front", "bound")}
    return series, fits


def _front_slopes(ctx: ExperimentContext, surface: ProfileSurface, point: SurfacePoint) -> None:
    """Growth slope of integral_count within that of the front, and the front within its L-corrected bound."""
    p = ctx.params
    times = np.linspace(p["series_T_max"] / p["series_points"], p["series_T_max"], p["series_points"])
    task = Task("front_series", _front_growth,
                (surface, point, times, p["n_dirs"], ctx.tolerance, ctx.config.seed or 0))
    outcome = ctx.run_tasks([task], CheckCategory.GROWTH)[0]
    if not outcome.ok:
        return
    series, fits = outcome.result
    ctx.writer.write_csv("front_series.csv", series.to_rows())
    ctx.results["slopes"] = {name: fit.to_dict() for name, fit in fits.items()}
    # a factor t^k moves a slope fitted on [t1, t2] by at most k / t1
    slack = 1.0 / fits["count"].window[0]
    ctx.suite.compare("count_slope_within_front_slope", CheckCategory.GROWTH,
                      fits["count"].ci_low, "<=", fits["front"].ci_high, slack)
    ctx.suite.compare("front_slope_within_bound_slope", CheckCategory.GROWTH,
                      fits["front"].ci_low, "<=", fits["bound"].ci_high, slack)


def _front_period(ctx: ExperimentContext, surface: ProfileSurface) -> None:
    """Front from the pole P at T and one full meridian period later."""
    p = ctx.params
    pole = SurfacePoint(0.0, surface.length)
    T = p["period_T"]
    period = 2.0 * surface.length
    tasks = [Task(f"pole_front_T{t:g}", front_length, (surface, pole, t, p["refine_tol"], ctx.tolerance),
                  {"initial_dirs": p["initial_dirs"], "budget": p["budget"]})
             for t in (T, T + period)]
    outcomes = ctx.run_tasks(tasks, CheckCategory.COUNTING)
    if not all(o.ok for o in outcomes):
        return
    first, later = (o.result.length for o in outcomes)
    ctx.results["pole_front"] = {"T": T, "period": period, "length": first, "length_after_period": later}
    ctx.suite.compare("pole_front_periodic", CheckCategory.COUNTING, later, "==", first, p["period_tol"] * first,
                      context={"T": T, "period": period})


def run_front(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface()
    point = SurfacePoint(p["p_theta"], p["p_l"] if p["p_l"] is not None else ctx.default_l)
    tasks = [Task(f"front_T{T:g}", _front_task, (surface, point, T, p, ctx.tolerance)) for T in p["T_values"]]
    rows = []
    for T, outcome in zip(p["T_values"], ctx.run_tasks(tasks, CheckCategory.COUNTING)):
        if not outcome.ok:
            continue
        front, volume, bound = outcome.result["front"], outcome.result["volume"], outcome.result["bound"]
        ctx.writer.write_csv(f"front_T{T:g}.csv", front.curve.to_rows())
        rows.append({"T": T, **front.to_dict(), "count_integral": volume.count_integral.value,
                     "front_integral": volume.front_integral.value, "bound_rhs": bound.rhs})
        ctx.suite.record(f"front_budget_T{T:g}", CheckCategory.COUNTING, not front.flagged,
                         "refinement stayed within budget" if not front.flagged else "refinement budget exceeded")
        ctx.suite.compare(f"front_quadrature_vs_polygonal_T{T:g}", CheckCategory.COUNTING,
                          abs(front.length - front.polygonal), "<=", p["refine_tol"])
        if not surface.is_dumbbell:
            ctx.suite.compare(f"sphere_front_T{T:g}", CheckCategory.COUNTING,
                              front.length, "==", TWO_PI, p["sphere_tol"])
        ctx.suite.record(f"volume_bound_T{T:g}", CheckCategory.COUNTING, volume.holds,
                         f"count {volume.count_integral.value:.6g} vs front integral "
                         f"{volume.front_integral.value:.6g}", context=volume.to_dict())
        ctx.suite.record(f"front_bound_T{T:g}", CheckCategory.COUNTING, bound.holds,
                         f"front {bound.front_length:.6g} vs {bound.rhs:.6g}", context=bound.to_dict())
    ctx.writer.write_csv("front.csv", rows)
    ctx.results["point"] = point.to_dict()
    _front_slopes(ctx, surface, point)
    if surface.is_dumbbell:
        _front_period(ctx, surface)


# ==========================================================================
# returnmap
# ==========================================================================


def _cylinder_row(surface: ProfileSurface, phi: float, thetas: Sequence[float], tol: FlowTolerance) -> float:
    """Worst difference of integrated and analytic cylinder transits along one phi row."""
    lm = surface.landmarks
    worst = 0.0
    for theta in thetas:
        start = SectionPoint(float(theta), phi, "S1")
        analytic = psi_cylinder(lm.d, lm.rho, start)
        integrated = numeric_transit(surface, start, tol).end
        worst = max(worst, abs(wrap_angle(integrated.theta - analytic.theta)), abs(integrated.phi - analytic.phi))
    return worst


def run_returnmap(ctx: ExperimentContext) -> None:
    p = ctx.params
    base = ctx.base_surface
    a2 = tabulate_transit(base, "a2", phi_max=p["phi_max"])
    a4 = tabulate_transit(base, "a4")
    ctx.writer.write_csv("a2.csv", a2.to_rows())
    ctx.writer.write_csv("a4.csv", a4.to_rows())
    for transit in (a2, a4):
        ctx.suite.compare(f"{transit.name}_at_zero", CheckCategory.SECTIONS, transit(0.0), "==", math.pi, p["turn_tol"])
        phi = 0.5 * transit.phi_max
        ctx.suite.compare(f"{transit.name}_reflection", CheckCategory.SECTIONS,
                          transit(phi) + transit(-phi), "==", TWO_PI, p["turn_tol"])

    n = p["grid"]
    thetas = TWO_PI * np.arange(n) / n
    phis = np.linspace(-p["phi_max"], p["phi_max"], n)
    tasks = [Task(f"cylinder_row_{j}", _cylinder_row, (base, float(phi), thetas, ctx.tolerance))
             for j, phi in enumerate(phis)]
    worst = [o.result for o in _ok(ctx.run_tasks(tasks, CheckCategory.SECTIONS))]
    if worst:
        ctx.suite.compare("cylinder_transit_matches_flow", CheckCategory.SECTIONS, max(worst), "<=", p["advance_tol"])

    fn = ReturnMap(base, a2, a4).as_map("S1")
    jac_rows = []
    for k, phi in enumerate(np.linspace(-0.5 * a4.phi_max, 0.5 * a4.phi_max, p["area_points"])):
        theta = 0.7 * k
        jac_rows.append({"theta": theta, "phi": float(phi), "jacobian": area_jacobian(fn, theta, float(phi))})
    ctx.writer.write_csv("area_jacobian.csv", jac_rows)
    ctx.suite.compare("return_map_preserves_area", CheckCategory.SECTIONS,
                      max(abs(r["jacobian"] - 1.0) for r in jac_rows), "<=", p["area_tol"])

    d_values = list(ctx.d_values)
    tasks = [Task(f"scaling_d{d:g}", scaling_distance,
                  (ReturnMap(ctx.surface_at(d), a2, a4).as_map("S1"), d, base.landmarks.rho, p["scaling_grid"]))
             for d in d_values]
    outcomes = ctx.run_tasks(tasks, CheckCategory.SECTIONS)
    scaling = [{"d": d, "distance": o.result} for d, o in zip(d_values, outcomes) if o.ok]
    ctx.writer.write_csv("scaling.csv", scaling)
    for a, b in zip(scaling, scaling[1:]):
        ratio = b["distance"] / a["distance"]
        ctx.suite.compare(f"scaling_decreases_d{b['d']:g}", CheckCategory.SECTIONS, b["distance"], "<", a["distance"])
        ctx.suite.compare(f"scaling_ratio_d{b['d']:g}", CheckCategory.SECTIONS,
                          ratio, "<=", 2.0 * a["d"] / b["d"])


# ==========================================================================
# circle
# ==========================================================================


def _circle_maps(ctx: ExperimentContext, turn: SurrogateTurn, a2, a4) -> Callable[[float, str], Callable]:
    def build(d: float, section: str = "S1"):
        return ReturnMap(ctx.surface(d), a2, a4, turn).as_map(section)
    return build


def run_circle(ctx: ExperimentContext) -> None:
    p = ctx.params
    base = ctx.base_surface
    surface = ctx.surface()
    a2 = tabulate_transit(base, "a2")
    a4 = tabulate_transit(base, "a4")
    d_values = list(ctx.d_values)
    phi_max = min(a4.phi_max, 1.25 / min(d_values))

    def surrogate(tol: FlowTolerance) -> SurrogateTurn:
        return SurrogateTurn(surface, a4, phi_max, p["surrogate_theta"], p["surrogate_phi"], tol)

    build = _circle_maps(ctx, surrogate(ctx.tolerance), a2, a4)
    d0, sweep = measure_d0(lambda d: build(d, "S1"), d_values, p["n_iter"], p["n_seeds"])
    ctx.results["d0"] = d0
    ctx.results["sweep"] = [w.to_dict() for w in sweep]
    ctx.suite.record("d0_found", CheckCategory.SECTIONS, d0 is not None,
                     f"d0 = {d0}" if d0 is not None else f"no confined witness for d in {d_values}")
    if d0 is None:
        return

    cases = [(d, section) for d in (d0, 2 * d0) for section in ("S1", "S4")]
    tasks = [Task(f"circle_{section}_d{d:g}", detect_invariant_circle,
                  (build(d, section), d, p["n_iter"], p["n_seeds"]),
                  {"section": section})
             for d, section in cases]
    witnesses = []
    for (d, section), outcome in zip(cases, ctx.run_tasks(tasks, CheckCategory.SECTIONS)):
        if not outcome.ok:
            continue
        witness = outcome.result
        witnesses.append(witness)
        ctx.suite.record(f"circle_{section}_d{d:g}", CheckCategory.SECTIONS, witness.confined,
                         f"verdict {witness.verdict}", context={"band": witness.band})
    ctx.writer.write_csv("witnesses.csv", [w.to_dict() for w in witnesses])
    ctx.writer.write_csv("orbits.csv", [{"section": w.section, "d": w.d, **o.to_dict()}
                                        for w in witnesses for o in w.orbits])

    halved = _circle_maps(ctx, surrogate(ctx.tolerance.halved()), a2, a4)
    again = detect_invariant_circle(halved(d0, "S1"), d0, p["n_iter"], p["n_seeds"], section="S1")
    ctx.suite.record("verdict_stable_under_halving", CheckCategory.SECTIONS, again.confined,
                     f"verdict {again.verdict} with halved tolerances")

    confined = [w for w in witnesses if w.confined and w.d == d0 and w.section == "S1"]
    if confined:
        inner = min(abs(b) for b in confined[0].band)
        v = SectionPoint(0.0, 0.25 * inner, "S1").state(ctx.surface(d0))
        side = classify_side(ctx.surface(d0), confined, v, p["classify_T"], tol=ctx.tolerance)
        ctx.results["inner_point_side"] = side
        ctx.suite.record("inner_point_in_w1", CheckCategory.SECTIONS, side == "W1", f"classified {side}")


# ==========================================================================
# lyapunov
# ==========================================================================


def _exponent_grid(surface: ProfileSurface, d: float, epsilon: float, T: float, p: Dict[str, Any],
                   tol: FlowTolerance) -> List[float]:
    half = p["w1_fraction"] / d
    exponents = []
    for phi in np.linspace(-half, half, p["grid_phi"]):
        for theta in TWO_PI * np.arange(p["grid_theta"]) / p["grid_theta"]:
            v = SectionPoint(float(theta), float(phi), "S1").state(surface)
            exponents.append(finite_time_exponent(surface, v, T, epsilon, tol))
    return exponents


def comparison_horizon(T: float, d: float, t0: float, passes: int) -> float:
    """At least T, and long enough to cross a cylinder of length 2d and back ``passes`` times."""
    return max(T, passes * (4.0 * d + 2.0 * t0))


def _measure_constants(ctx: ExperimentContext) -> Tuple[float, float]:
    """L, t0 (checked against the surface with doubled d) and phi_0."""
    p = ctx.params
    d = ctx.config.surface.d
    L = measure_curvature_bound(ctx.surface())
    sojourn = measure_sojourn(ctx.base_surface, 1.0 / d, p["sojourn_phi"], tol=ctx.tolerance)
    doubled = measure_sojourn(ctx.surface_at(2.0 * d), 0.5 / d, p["sojourn_phi"], tol=ctx.tolerance)
    t0 = sojourn.t0
    ctx.writer.write_csv("sojourn.csv", [{"d": d, **r} for r in sojourn.rows] +
                         [{"d": 2.0 * d, **r} for r in doubled.rows])
    ctx.results["L"] = L
    ctx.results["t0"] = t0
    ctx.results["t0_sampled"] = sojourn.to_dict()
    ctx.results["t0_doubled_d"] = doubled.to_dict()
    ctx.suite.compare("t0_stable_when_d_doubles", CheckCategory.LYAPUNOV, doubled.t0, "==", t0,
                      p["t0_rel_tol"] * t0)

    phi0 = measure_phi0(ctx.base_surface, t0=t0, tol=ctx.tolerance)
    ctx.results["phi0"] = phi0
    ctx.suite.compare("w1_band_inside_phi0", CheckCategory.SECTIONS, 1.0 / d, "<", phi0)
    return L, t0


def run_lyapunov(ctx: ExperimentContext) -> None:
    p = ctx.params
    d = ctx.config.surface.d
    L, t0 = _measure_constants(ctx)

    thresholds = {eps: max(d, p["threshold_margin"] * threshold_length(eps, L, t0)) for eps in p["epsilons"]}
    cases = []
    for eps, d_eps in thresholds.items():
        cases += [(eps, d_eps), (eps, 2.0 * d_eps)]
    tasks = [Task(f"exponents_eps{eps:g}_d{dd:.6g}", _exponent_grid,
                  (ctx.surface(dd), dd, eps, p["T"], p, ctx.tolerance))
             for eps, dd in cases]
    outcomes = ctx.run_tasks(tasks, CheckCategory.LYAPUNOV)

    rows = []
    for (eps, dd), outcome in zip(cases, outcomes):
        if not outcome.ok:
            continue
        params = LyapunovBoundParams(eps, L, t0, dd)
        exponents = outcome.result
        rows.extend({"epsilon": eps, "d": dd, "index": k, "exponent": x, "bound": params.bound}
                    for k, x in enumerate(exponents))
        ctx.suite.compare(f"exponent_below_bound_eps{eps:g}_d{dd:.6g}", CheckCategory.LYAPUNOV,
                          max(exponents), "<", params.bound, context=params.to_dict())
    ctx.writer.write_csv("exponents.csv", rows)

    horizons = {eps: comparison_horizon(p["T"], d_eps, t0, p["min_passes"]) for eps, d_eps in thresholds.items()}
    tasks = [Task(f"long_exponents_eps{eps:g}_d{dd:.6g}", _exponent_grid,
                  (ctx.surface(dd), dd, eps, horizons[eps], p, ctx.tolerance))
             for eps, dd in cases]
    means: Dict[Tuple[float, float], float] = {}
    for (eps, dd), outcome in zip(cases, ctx.run_tasks(tasks, CheckCategory.LYAPUNOV)):
        if outcome.ok:
            means[(eps, dd)] = float(np.mean(outcome.result))
    for eps, d_eps in thresholds.items():
        if (eps, d_eps) in means and (eps, 2.0 * d_eps) in means:
            ctx.suite.compare(f"exponents_decrease_eps{eps:g}", CheckCategory.LYAPUNOV,
                              means[(eps, 2.0 * d_eps)], "<", means[(eps, d_eps)],
                              context={"T": horizons[eps]})
    ctx.results["mean_exponents"] = [{"epsilon": e, "d": x, "T": horizons[e], "mean": m}
                                     for (e, x), m in means.items()]


# ==========================================================================
# splitting
# ==========================================================================


def run_splitting(ctx: ExperimentContext) -> None:
    p = ctx.params
    base = ctx.base_surface
    bump = ctx.bump
    tol = ctx.tolerance
    anchor = anchor_state(base, bump.anchor.theta, bump.anchor.l)
    trace = trace_separatrix(base, anchor, bump, p["seed_distance"], tol)
    ctx.results["trace"] = trace.to_dict()

    rate = hyperbolic_rate(base)
    ctx.suite.compare("separatrix_clairaut_drift", CheckCategory.HOMOCLINIC, trace.max_drift, "<=", CLAIRAUT_DRIFT)
    for name, measured in (("forward", trace.forward_rate), ("backward", trace.backward_rate)):
        ctx.suite.compare(f"{name}_approach_rate", CheckCategory.HOMOCLINIC,
                          abs(measured - rate) / rate, "<=", p["rate_rel_tol"])
    ctx.suite.record("bump_support_straddles_anchor", CheckCategory.HOMOCLINIC, trace.t1 < 0.0 < trace.t2,
                     f"[t1, t2] = [{trace.t1:.4g}, {trace.t2:.4g}]")
    deviation = separatrix_deviation(ctx.surface(), trace, tol=tol)
    ctx.suite.compare("separatrix_survives_bump", CheckCategory.HOMOCLINIC, deviation, "<=", p["deviation_tol"])

    A = bump.amplitude
    amplitudes = [0.0] + [A * f for f in p["fractions"]]
    tasks = [Task(f"gap_A{a:g}", splitting_gap, (base.with_bump(bump.with_amplitude(a)), trace, tol),
                  {"error_bar": a == A})
             for a in amplitudes]
    results = {a: o.result for a, o in zip(amplitudes, ctx.run_tasks(tasks, CheckCategory.HOMOCLINIC)) if o.ok}
    ctx.writer.write_csv("splitting.csv", [results[a].to_dict() for a in amplitudes if a in results])

    if 0.0 in results:
        ctx.suite.compare("gap_vanishes_without_bump", CheckCategory.HOMOCLINIC,
                          abs(results[0.0].gap), "<=", p["zero_gap_tol"])
    if A in results:
        full = results[A]
        ctx.suite.compare("gap_significant", CheckCategory.HOMOCLINIC,
                          abs(full.gap), ">", p["significance"] * full.error)
        ctx.suite.record("gap_sign_opposes_amplitude", CheckCategory.HOMOCLINIC,
                         math.copysign(1.0, full.gap) == -math.copysign(1.0, A),
                         f"gap {full.gap:.6g} at A={A:g}")
        ctx.suite.compare("riccati_matches_jacobi", CheckCategory.HOMOCLINIC,
                          abs(full.u_minus - full.u_minus_jacobi), "<=", p["cross_tol"])
    nonzero = [results[a] for a in amplitudes[1:] if a in results]
    if len(nonzero) >= 2:
        ctx.suite.compare("gap_linear_in_amplitude", CheckCategory.HOMOCLINIC,
                          linear_response_spread(nonzero), "<=", p["linear_tol"])


# ==========================================================================
# headline
# ==========================================================================


def _growth_task(surface: ProfileSurface, point: SurfacePoint, times: np.ndarray, p: Dict[str, Any],
                 seed: int, tol: FlowTolerance):
    series = integral_count_series(surface, point, times, p["n_dirs"], tol)
    return series, growth_rate(series, p["n_boot"], seed, p["confidence"])


def _tangle_states(surface: ProfileSurface, bump: Optional[PerturbationBump], n: int,
                   offset: float) -> List[GeodesicState]:
    """States fanned around the separatrix anchor, where the homoclinic tangle sits."""
    base = surface.unperturbed()
    if bump is not None:
        anchor = anchor_state(base, bump.anchor.theta, bump.anchor.l)
    else:
        anchor = anchor_state(base, 0.0, base.landmarks.l1)
    steps = np.arange(n) - 0.5 * (n - 1)
    return [GeodesicState.from_psi(anchor.theta, anchor.l, anchor.psi + offset * float(k)) for k in steps]


def _bootstrap_mean(values: Sequence[float], n_boot: int, confidence: float,
                    rng: np.random.Generator) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    means = values[idx].mean(axis=1)
    alpha = 0.5 * (1.0 - confidence)
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def run_headline(ctx: ExperimentContext) -> None:
    p = ctx.params
    surface = ctx.surface()
    lm = surface.landmarks
    times = np.linspace(p["T_max"] / p["T_points"], p["T_max"], p["T_points"])

    points: List[Tuple[str, SurfacePoint]] = []
    for offset in p["pole_offsets"]:
        for j in range(p["pole_thetas"]):
            theta = TWO_PI * j / p["pole_thetas"]
            points.append(("V_Q", SurfacePoint(theta, offset)))
            points.append(("V_P", SurfacePoint(theta, surface.length - offset)))
    for j in range(p["neck_points"]):
        points.append(("gamma0", SurfacePoint(TWO_PI * j / p["neck_points"], lm.l0)))

    seeds = [int(s.generate_state(1)[0]) for s in ctx.seed_sequences(_BOOTSTRAP_STREAM, len(points) + 1)]
    tasks = [Task(f"growth_{region}_{k}", _growth_task, (surface, point, times, p, seeds[k], ctx.tolerance))
             for k, (region, point) in enumerate(points)]
    states = _tangle_states(surface, ctx.bump, p["tangle_states"], p["tangle_offset"])
    tasks += [Task(f"tangle_{k}", finite_time_exponent, (surface, v, p["T_max"], p["epsilon"], ctx.tolerance))
              for k, v in enumerate(states)]
    outcomes = ctx.run_tasks(tasks, CheckCategory.GROWTH)
    growth, tangle = outcomes[:len(points)], outcomes[len(points):]

    exponents = [o.result for o in tangle if o.ok]
    if not exponents:
        ctx.suite.record("tangle_proxy", CheckCategory.GROWTH, False, "no tangle exponent could be computed")
        return
    proxy_lo, proxy_hi = _bootstrap_mean(exponents, p["n_boot"], p["confidence"],
                                         np.random.default_rng(seeds[-1]))
    ctx.results["proxy"] = {"exponents": exponents, "ci_low": proxy_lo, "ci_high": proxy_hi}

    rows, series_rows = [], []
    for (region, point), outcome in zip(points, growth):
        if not outcome.ok:
            continue
        series, fit = outcome.result
        separated = fit.ci_high < proxy_lo
        rows.append({"region": region, "theta": point.theta, "l": point.l, "slope": fit.slope,
                     "ci_low": fit.ci_low, "ci_high": fit.ci_high, "proxy_low": proxy_lo,
                     "proxy_high": proxy_hi, "separated": separated})
        series_rows.extend({"region": region, "theta": point.theta, "l": point.l, **r} for r in series.to_rows())
        if region != "gamma0":
            ctx.suite.compare(f"growth_below_proxy_{region}_{point.theta:.3f}_{point.l:.3f}",
                              CheckCategory.GROWTH, fit.ci_high, "<", proxy_lo, context=fit.to_dict())
    ctx.writer.write_csv("headline.csv", rows)
    ctx.writer.write_csv("headline_series.csv", series_rows)


def experiment_runners() -> Dict[str, Callable[[ExperimentContext], None]]:
    """Runner per experiment name."""
    return {
        "check-surface": run_check_surface,
        "trace": run_trace,
        "count": run_count,
        "integral": run_integral,
        "front": run_front,
        "returnmap": run_returnmap,
        "circle": run_circle,
        "lyapunov": run_lyapunov,
        "splitting": run_splitting,
        "headline": run_headline,
    }


__all__ = [
    "ExperimentContext",
    "experiment_runners",
    "sphere_integral_count",
]
