"""Geodesic, Jacobi and Riccati integration on (possibly perturbed) profile surfaces.

The flow is integrated in segments. Each segment lives in one chart:

- ``surface``: (theta, l, psi) with theta' = sin(psi)/r, l' = cos(psi),
  psi' = -r' sin(psi)/r;
- ``bump``: (t, x, t', x') of the perturbation chart, entered and left at the
  boundary of its box where the metric is still flat;
- ``pole``: closed-form passage through the polar disc of radius
  ``POLE_RADIUS`` by Clairaut quadrature, with the Jacobi data propagated at
  the constant pole curvature.

Normal Jacobi pairs (y, y'), their running integrals and one Riccati variable
are carried along in the same state vector. The Riccati variable switches to
w = 1/u when |u| > 10 and back when |w| > 0.2; zeros of w are conjugate points.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from geodesic_lab_core.decorators import observed
from geodesic_lab_core.exceptions import IntegrationError
from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import get_global_metrics
from geodesic_lab_geometry.states import (
    GeodesicState,
    JacobiState,
    RiccatiState,
    wrap_angle,
    wrap_positive,
)
from geodesic_lab_geometry.surface import POLE_RADIUS, ProfileSurface

logger = logging.getLogger(__name__)

RICCATI_BLOWUP = 10.0
RICCATI_RETURN = 0.2
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(16)
_MAX_SEGMENTS = 200000


@dataclass(frozen=True)
class FlowTolerance:
    """Integrator settings."""

    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    max_step: float = math.inf
    # step cap while a bump is present, so no step jumps across its support
    bump_max_step: float = 0.1

    def halved(self) -> "FlowTolerance":
        return replace(self, rtol=self.rtol / 2.0, atol=self.atol / 2.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"rtol": self.rtol, "atol": self.atol, "method": self.method,
                "max_step": self.max_step, "bump_max_step": self.bump_max_step}


@dataclass(frozen=True)
class CrossingEvent:
    """A recorded event along a trajectory."""

    kind: str
    time: float
    theta: float
    l: float
    psi: float
    section: Optional[str] = None

    @property
    def state(self) -> GeodesicState:
        return GeodesicState.from_psi(self.theta, self.l, self.psi, self.time)

    def to_dict(self) -> Dict[str, Any]:
        state = self.state
        return {
            "type": self.kind,
            "time": self.time,
            "section": self.section,
            "theta": state.theta,
            "l": self.l,
            "phi": state.phi,
            "heading": state.heading,
        }


@dataclass(frozen=True)
class StopCondition:
    """Stop at the first crossing of ``kind`` (optionally restricted to a section)."""

    kind: str
    section: Optional[str] = None

    def matches(self, event: CrossingEvent) -> bool:
        return event.kind == self.kind and (self.section is None or event.section == self.section)

    @property
    def direction(self) -> float:
        """Sign of l' at a matching crossing (0 when any crossing matches)."""
        return _SECTION_DIRECTION.get(self.section, 0.0)


_SECTION_DIRECTION = {"S1": 1.0, "S2": 1.0, "S3": -1.0, "S4": -1.0}


def section_of(kind: str, psi: float) -> Optional[str]:
    """Section label of an alpha/beta crossing from the sign of l'."""
    dl = math.cos(psi)
    if kind == "alpha":
        return "S1" if dl > 0.0 else "S4"
    if kind == "beta":
        return "S2" if dl > 0.0 else "S3"
    return None


def level_table(surface: ProfileSurface) -> List[Tuple[str, float]]:
    """Latitude levels whose crossings are recorded."""
    lm = surface.landmarks
    if lm is None:
        return []
    return [
        ("gamma0", lm.l0),
        ("band_lo", lm.band[0]),
        ("band_hi", lm.band[1]),
        ("alpha", lm.l_alpha),
        ("beta", lm.l_beta),
    ]


# ==========================================================================
# Linearized data carried along the flow
# ==========================================================================


def _propagator(K: float, tau: float) -> Tuple[float, float, float, float]:
    """Entries (m11, m12, m21, m22) of the Jacobi propagator at constant curvature."""
    if K > 1e-14:
        w = math.sqrt(K)
        c, s = math.cos(w * tau), math.sin(w * tau)
        return c, s / w, -w * s, c
    if K < -1e-14:
        w = math.sqrt(-K)
        c, s = math.cosh(w * tau), math.sinh(w * tau)
        return c, s / w, w * s, c
    return 1.0, tau, 0.0, 1.0


def _constant_curvature_step(K: float, tau: float, pairs: np.ndarray, acc: np.ndarray,
                             riccati: Optional[Tuple[float, str]]):
    """Advance Jacobi pairs, their integrals and the Riccati variable by ``tau`` at curvature K."""
    m11, m12, m21, m22 = _propagator(K, tau)
    new_pairs = np.empty_like(pairs)
    new_pairs[:, 0] = m11 * pairs[:, 0] + m12 * pairs[:, 1]
    new_pairs[:, 1] = m21 * pairs[:, 0] + m22 * pairs[:, 1]
    new_acc = acc.copy()
    conjugate_times: List[float] = []
    if tau > 0.0 and len(pairs):
        nodes = 0.5 * tau * (_GAUSS_X + 1.0)
        weights = 0.5 * tau * _GAUSS_W
        for k, (node, weight) in enumerate(zip(nodes, weights)):
            a11, a12, a21, a22 = _propagator(K, float(node))
            ys = a11 * pairs[:, 0] + a12 * pairs[:, 1]
            dys = a21 * pairs[:, 0] + a22 * pairs[:, 1]
            new_acc[:, 0] += weight * K * ys
            new_acc[:, 1] += weight * np.abs(ys)
            new_acc[:, 2] += weight * np.hypot(ys, dys)
    new_ric = None
    if riccati is not None:
        value, chart = riccati
        p0, q0 = (1.0, value) if chart == "u" else (value, 1.0)
        p = m11 * p0 + m12 * q0
        q = m21 * p0 + m22 * q0
        if p0 * p < 0.0 or p == 0.0:
            conjugate_times.append(_projective_zero(K, tau, p0, q0))
        if abs(p) * RICCATI_BLOWUP >= abs(q):
            new_ric = (q / p, "u")
        else:
            new_ric = (p / q, "w")
    return new_pairs, new_acc, new_ric, conjugate_times


def _projective_zero(K: float, tau: float, p0: float, q0: float) -> float:
    """Time in [0, tau] where the Jacobi amplitude through (p0, q0) vanishes."""
    lo, hi = 0.0, tau
    f_lo = p0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        m11, m12, _, _ = _propagator(K, mid)
        f_mid = m11 * p0 + m12 * q0
        if (f_mid < 0.0) == (f_lo < 0.0) and f_mid != 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ==========================================================================
# Segments
# ==========================================================================


@dataclass
class _Layout:
    geo: int
    pairs: int
    riccati: bool

    @property
    def jac(self) -> slice:
        return slice(self.geo, self.geo + 2 * self.pairs)

    @property
    def acc(self) -> slice:
        start = self.geo + 2 * self.pairs
        return slice(start, start + 3 * self.pairs)

    @property
    def ric(self) -> int:
        return self.geo + 5 * self.pairs

    @property
    def size(self) -> int:
        return self.geo + 5 * self.pairs + (1 if self.riccati else 0)


@dataclass
class _Sample:
    """Columns of sampled data: theta, l, psi, jacobi (n, pairs, 2), acc (n, pairs, 3), riccati."""

    s: np.ndarray
    theta: np.ndarray
    l: np.ndarray
    psi: np.ndarray
    jacobi: np.ndarray
    acc: np.ndarray
    ric_value: np.ndarray
    ric_chart: List[str]


class _OdeSegment:
    def __init__(self, chart: str, layout: _Layout, sol, t0: float, t1: float,
                 surface: ProfileSurface, ric_chart: Optional[str], theta_offset: float = 0.0):
        self.chart = chart
        self.layout = layout
        self.sol = sol
        self.t0 = t0
        self.t1 = t1
        self.surface = surface
        self.ric_chart = ric_chart
        self.theta_offset = theta_offset

    def evaluate(self, ts: np.ndarray) -> _Sample:
        ys = self.sol(ts) if len(ts) else np.zeros((self.layout.size, 0))
        ys = np.atleast_2d(ys)
        if ys.shape[0] != self.layout.size:
            ys = ys.reshape(self.layout.size, -1)
        lay = self.layout
        if self.chart == "surface":
            theta, l, psi = ys[0], ys[1], ys[2]
        else:
            bump = self.surface.bump
            conv = [bump.from_chart(float(t), float(x)) for t, x in zip(ys[0], ys[1])]
            theta = np.array([c[0] for c in conv]) + self.theta_offset
            l = np.array([c[1] for c in conv])
            psi = np.array([bump.velocity_from_chart(float(a), float(b)) for a, b in zip(ys[2], ys[3])])
        n = ys.shape[1]
        jac = ys[lay.jac].T.reshape(n, lay.pairs, 2)
        acc = ys[lay.acc].T.reshape(n, lay.pairs, 3)
        if lay.riccati:
            ric_value = ys[lay.ric].copy()
            ric_chart = [self.ric_chart] * n
        else:
            ric_value = np.full(n, np.nan)
            ric_chart = [""] * n
        return _Sample(np.asarray(ts, dtype=float), np.asarray(theta), np.asarray(l), np.asarray(psi),
                       jac, acc, ric_value, ric_chart)


class _PoleSegment:
    def __init__(self, surface: ProfileSurface, at_end: bool, t0: float, duration: float,
                 theta_in: float, l_in: float, psi_in: float, dtheta: float, K: float,
                 pairs: np.ndarray, acc: np.ndarray, riccati: Optional[Tuple[float, str]]):
        self.chart = "pole"
        self.surface = surface
        self.at_end = at_end
        self.t0 = t0
        self.t1 = t0 + duration
        self.duration = duration
        self.theta_in = theta_in
        self.l_in = l_in
        self.psi_in = psi_in
        self.dtheta = dtheta
        self.K = K
        self.pairs = pairs
        self.acc = acc
        self.riccati = riccati

    def _radius(self, l: float) -> float:
        return self.surface.length - l if self.at_end else l

    def position(self, frac: float) -> Tuple[float, float, float]:
        """(theta, l, psi) along the chord of the polar disc at fraction ``frac``."""
        a = self._radius(self.l_in)
        th_out = self.theta_in + self.dtheta
        p_in = np.array([a * math.cos(self.theta_in), a * math.sin(self.theta_in)])
        p_out = np.array([a * math.cos(th_out), a * math.sin(th_out)])
        chord = p_out - p_in
        length = float(np.hypot(*chord))
        if frac >= 1.0:
            return th_out, self.l_in, math.pi - self.psi_in
        if frac <= 0.0 or length == 0.0:
            return self.theta_in, self.l_in, self.psi_in
        p = p_in + frac * chord
        rad = float(np.hypot(*p))
        theta = math.atan2(p[1], p[0]) if rad > 1e-15 else self.theta_in
        direction = chord / length
        e_a = np.array([math.cos(theta), math.sin(theta)])
        e_t = np.array([-math.sin(theta), math.cos(theta)])
        radial = float(direction @ e_a)
        angular = float(direction @ e_t)
        if self.at_end:
            psi = math.atan2(angular, -radial)
            l = self.surface.length - rad
        else:
            psi = math.atan2(angular, radial)
            l = rad
        # keep theta continuous with the entry value
        theta = self.theta_in + wrap_angle(theta - self.theta_in)
        return theta, l, psi

    def linear_at(self, tau: float):
        return _constant_curvature_step(self.K, tau, self.pairs, self.acc, self.riccati)

    def evaluate(self, ts: np.ndarray) -> _Sample:
        n = len(ts)
        npairs = self.pairs.shape[0]
        theta = np.empty(n)
        l = np.empty(n)
        psi = np.empty(n)
        jac = np.empty((n, npairs, 2))
        acc = np.empty((n, npairs, 3))
        ric_value = np.full(n, np.nan)
        ric_chart = [""] * n
        for i, t in enumerate(ts):
            tau = min(max(float(t) - self.t0, 0.0), self.duration)
            frac = tau / self.duration if self.duration > 0.0 else 1.0
            theta[i], l[i], psi[i] = self.position(frac)
            pairs, accs, ric, _ = self.linear_at(tau)
            jac[i] = pairs
            acc[i] = accs
            if ric is not None:
                ric_value[i], ric_chart[i] = ric
        return _Sample(np.asarray(ts, dtype=float), theta, l, psi, jac, acc, ric_value, ric_chart)


# ==========================================================================
# Trajectory
# ==========================================================================


@dataclass
class Trajectory:
    """Sampled geodesic with carried Jacobi/Riccati data and recorded events."""

    surface: ProfileSurface
    start: GeodesicState
    end: GeodesicState
    s: np.ndarray
    theta: np.ndarray
    l: np.ndarray
    psi: np.ndarray
    jacobi: np.ndarray
    accumulators: np.ndarray
    riccati: np.ndarray
    riccati_chart: List[str]
    events: List[CrossingEvent]
    final_jacobi: np.ndarray
    final_accumulators: np.ndarray
    final_riccati: Optional[RiccatiState]
    stopped_by: Optional[CrossingEvent] = None
    segments: List[Any] = field(default_factory=list, repr=False)

    @property
    def duration(self) -> float:
        return self.end.s - self.start.s

    def states(self) -> List[GeodesicState]:
        return [GeodesicState.from_psi(float(t), float(l), float(p), float(s))
                for s, t, l, p in zip(self.s, self.theta, self.l, self.psi)]

    def clairaut_values(self) -> np.ndarray:
        """r(l) sin(psi) at every sample."""
        radii = self.surface.profile.radius_array(np.clip(self.l, 0.0, self.surface.length))
        return radii * np.sin(self.psi)

    def events_of(self, kind: str) -> List[CrossingEvent]:
        return [e for e in self.events if e.kind == kind]

    def section_events(self) -> List[CrossingEvent]:
        return [e for e in self.events if e.section is not None]

    def sample(self, times: Sequence[float]) -> _Sample:
        """Evaluate the dense solution at arbitrary times inside the trajectory."""
        times = np.asarray(times, dtype=float)
        starts = [seg.t0 for seg in self.segments]
        groups: Dict[int, List[int]] = {}
        for idx, t in enumerate(times):
            k = max(0, min(bisect.bisect_right(starts, t) - 1, len(self.segments) - 1))
            groups.setdefault(k, []).append(idx)
        n = len(times)
        npairs = self.final_jacobi.shape[0]
        out = _Sample(times, np.empty(n), np.empty(n), np.empty(n), np.empty((n, npairs, 2)),
                      np.empty((n, npairs, 3)), np.full(n, np.nan), [""] * n)
        for k, idxs in groups.items():
            seg = self.segments[k]
            sub = seg.evaluate(np.clip(times[idxs], seg.t0, seg.t1))
            out.theta[idxs] = sub.theta
            out.l[idxs] = sub.l
            out.psi[idxs] = sub.psi
            out.jacobi[idxs] = sub.jacobi
            out.acc[idxs] = sub.acc
            out.ric_value[idxs] = sub.ric_value
            for j, i in enumerate(idxs):
                out.ric_chart[i] = sub.ric_chart[j]
        return out

    def state_at(self, s: float) -> GeodesicState:
        smp = self.sample([s])
        return GeodesicState.from_psi(float(smp.theta[0]), float(smp.l[0]), float(smp.psi[0]), s)

    def to_rows(self) -> List[Dict[str, float]]:
        """Rows (s, theta, l, phi, clairaut, K) for CSV export."""
        rows = []
        for state, c in zip(self.states(), self.clairaut_values()):
            rows.append({
                "s": state.s, "theta": state.theta, "l": state.l, "phi": state.phi,
                "heading": state.heading, "clairaut": float(c),
                "K": self.surface.curvature_at(state.theta, state.l),
            })
        return rows


# ==========================================================================
# Integrator
# ==========================================================================


def _make_event(fn: Callable, terminal: bool, direction: float) -> Callable:
    fn.terminal = terminal
    fn.direction = direction
    return fn


class _Integrator:
    def __init__(self, surface: ProfileSurface, tol: FlowTolerance, n_pairs: int, riccati: bool,
                 stop: Optional[StopCondition], record_levels: bool):
        self.surface = surface
        self.tol = tol
        self.n_pairs = n_pairs
        self.riccati = riccati
        self.stop = stop
        self.levels = level_table(surface) if record_levels or stop is not None else []
        self.perturbed = surface.is_perturbed
        self.bump = surface.bump if self.perturbed else None
        self.metrics = get_global_metrics()
        self.names = get_metric_standardizer()
        self.theta_offset = 0.0

    # -- right-hand sides ------------------------------------------------

    def _linear_tail(self, out: np.ndarray, y: np.ndarray, lay: _Layout, K: float, ric_chart: Optional[str]) -> None:
        g = lay.geo
        a = g + 2 * lay.pairs
        for i in range(lay.pairs):
            yy = y[g + 2 * i]
            yp = y[g + 2 * i + 1]
            out[g + 2 * i] = yp
            out[g + 2 * i + 1] = -K * yy
            out[a + 3 * i] = K * yy
            out[a + 3 * i + 1] = abs(yy)
            out[a + 3 * i + 2] = math.hypot(yy, yp)
        if lay.riccati:
            z = y[lay.ric]
            out[lay.ric] = -z * z - K if ric_chart == "u" else 1.0 + K * z * z

    def _surface_rhs(self, lay: _Layout, ric_chart: Optional[str]) -> Callable:
        evaluate = self.surface.profile.evaluate

        def rhs(s: float, y: np.ndarray) -> np.ndarray:
            r, dr, ddr = evaluate(y[1])
            sp = math.sin(y[2])
            out = np.empty(lay.size)
            out[0] = sp / r
            out[1] = math.cos(y[2])
            out[2] = -dr * sp / r
            self._linear_tail(out, y, lay, -ddr / r, ric_chart)
            return out

        return rhs

    def _bump_rhs(self, lay: _Layout, ric_chart: Optional[str]) -> Callable:
        bump = self.bump

        def rhs(s: float, y: np.ndarray) -> np.ndarray:
            at, ax, K = bump.geodesic_rhs(y[0], y[1], y[2], y[3])
            out = np.empty(lay.size)
            out[0] = y[2]
            out[1] = y[3]
            out[2] = at
            out[3] = ax
            self._linear_tail(out, y, lay, K, ric_chart)
            return out

        return rhs

    # -- events ----------------------------------------------------------

    def _events(self, chart: str, lay: _Layout, ric_chart: Optional[str], skip_stop: bool):
        """(event functions, descriptors) for one segment."""
        events: List[Callable] = []
        tags: List[Tuple[str, Any]] = []
        length = self.surface.length
        if chart == "surface":
            for name, level in self.levels:
                events.append(_make_event(lambda s, y, L=level: y[1] - L, False, 0.0))
                tags.append(("level", name))
                if self.stop is not None and self.stop.kind == name and not skip_stop:
                    events.append(_make_event(lambda s, y, L=level: y[1] - L, True, self.stop.direction))
                    tags.append(("stop", name))
            events.append(_make_event(lambda s, y: y[1] - POLE_RADIUS, True, -1.0))
            tags.append(("pole", False))
            events.append(_make_event(lambda s, y: (length - POLE_RADIUS) - y[1], True, -1.0))
            tags.append(("pole", True))
            if self.bump is not None:
                bump = self.bump
                events.append(_make_event(lambda s, y: bump.box_indicator(*bump.to_chart(y[0], y[1])), True, -1.0))
                tags.append(("bump_enter", None))
        else:
            bump = self.bump
            events.append(_make_event(lambda s, y: bump.box_indicator(y[0], y[1]), True, 1.0))
            tags.append(("bump_exit", None))
        if lay.riccati:
            idx = lay.ric
            if ric_chart == "u":
                events.append(_make_event(lambda s, y: abs(y[idx]) - RICCATI_BLOWUP, True, 1.0))
                tags.append(("riccati_switch", "w"))
            else:
                events.append(_make_event(lambda s, y: abs(y[idx]) - RICCATI_RETURN, True, 1.0))
                tags.append(("riccati_switch", "u"))
                events.append(_make_event(lambda s, y: y[idx], False, 0.0))
                tags.append(("conjugate", None))
        return events, tags

    # -- main loop -------------------------------------------------------

    def run(self, v0: GeodesicState, T: float, pairs0: np.ndarray, acc0: np.ndarray,
            riccati0: Optional[Tuple[float, str]]) -> Tuple[List[Any], List[CrossingEvent], Optional[CrossingEvent], dict]:
        s = v0.s
        end = v0.s + T
        theta, l, psi = v0.theta, v0.l, v0.psi
        pairs = pairs0.astype(float).copy()
        acc = acc0.astype(float).copy()
        ric = riccati0
        segments: List[Any] = []
        events: List[CrossingEvent] = []
        stopped: Optional[CrossingEvent] = None

        chart = "surface"
        geo_bump: Optional[Tuple[float, float, float, float]] = None
        if self.bump is not None:
            t_b, x_b = self.bump.to_chart(theta, l)
            if self.bump.box_indicator(t_b, x_b) < 0.0:
                chart = "bump"
                geo_bump = self._enter_bump(theta, l, psi)

        skip_stop_until = -math.inf
        if self.stop is not None and chart == "surface":
            for name, level in self.levels:
                if name == self.stop.kind and abs(l - level) < 1e-9:
                    skip_stop_until = s + 1e-7

        max_step = self.tol.max_step
        if self.bump is not None:
            max_step = min(max_step, self.tol.bump_max_step)

        for _ in range(_MAX_SEGMENTS):
            if s >= end - 1e-13 or stopped is not None:
                break

            # polar disc
            if chart == "surface":
                at_end = None
                if l <= POLE_RADIUS + 1e-12 and math.cos(psi) < 0.0:
                    at_end = False
                elif l >= self.surface.length - POLE_RADIUS - 1e-12 and math.cos(psi) > 0.0:
                    at_end = True
                if at_end is not None:
                    seg = self._pole_segment(s, theta, l, psi, at_end, pairs, acc, ric)
                    segments.append(seg)
                    self.metrics.increment_counter(self.names.flow_chart_switches())
                    events.append(CrossingEvent("pole_P" if at_end else "pole_Q", s, theta, l, psi))
                    tau = min(seg.duration, end - s)
                    frac = tau / seg.duration if seg.duration > 0.0 else 1.0
                    theta, l, psi = seg.position(frac)
                    pairs, acc, ric, conj = seg.linear_at(tau)
                    for ct in conj:
                        events.append(CrossingEvent("conjugate", s + ct, theta, l, psi))
                    s = s + tau
                    seg.t1 = s
                    continue

            lay = _Layout(3 if chart == "surface" else 4, pairs.shape[0], ric is not None)
            ric_chart = ric[1] if ric is not None else None
            y0 = np.empty(lay.size)
            if chart == "surface":
                y0[0], y0[1], y0[2] = theta, l, psi
                rhs = self._surface_rhs(lay, ric_chart)
            else:
                y0[0:4] = geo_bump
                rhs = self._bump_rhs(lay, ric_chart)
            y0[lay.jac] = pairs.reshape(-1)
            y0[lay.acc] = acc.reshape(-1)
            if ric is not None:
                y0[lay.ric] = ric[0]

            seg_end = end
            skip_stop = s < skip_stop_until
            if skip_stop:
                seg_end = min(end, skip_stop_until)
            fns, tags = self._events(chart, lay, ric_chart, skip_stop)
            sol = solve_ivp(rhs, (s, seg_end), y0, method=self.tol.method, rtol=self.tol.rtol,
                            atol=self.tol.atol, max_step=max_step, events=fns or None, dense_output=True)
            self.metrics.increment_counter(self.names.flow_segments())
            if sol.status == -1:
                raise IntegrationError(
                    time=float(sol.t[-1]),
                    location=self._location(chart, sol.y[:, -1]),
                    reason=sol.message,
                )
            seg_start = s
            segment = _OdeSegment(chart, lay, sol.sol, seg_start, float(sol.t[-1]), self.surface, ric_chart,
                                   self.theta_offset if chart == "bump" else 0.0)
            segments.append(segment)

            # terminal event (if any) that ended the segment
            terminal_tag = None
            if sol.status == 1:
                best = math.inf
                for k, fn in enumerate(fns):
                    if fn.terminal and len(sol.t_events[k]) and sol.t_events[k][-1] < best:
                        best = float(sol.t_events[k][-1])
                        terminal_tag = k

            # non-terminal and terminal crossings, in time order
            recorded: List[Tuple[float, CrossingEvent]] = []
            for k, (kind, info) in enumerate(tags):
                if kind not in ("level", "conjugate"):
                    continue
                for t_ev, y_ev in zip(sol.t_events[k], sol.y_events[k]):
                    if t_ev - seg_start < 1e-10:
                        continue
                    if chart == "surface":
                        ev_theta, ev_l, ev_psi = float(y_ev[0]), float(y_ev[1]), float(y_ev[2])
                    else:
                        ev_theta, ev_l = self.bump.from_chart(float(y_ev[0]), float(y_ev[1]))
                        ev_theta += self.theta_offset
                        ev_psi = self.bump.velocity_from_chart(float(y_ev[2]), float(y_ev[3]))
                    if kind == "level":
                        event = CrossingEvent(info, float(t_ev), wrap_positive(ev_theta), ev_l, wrap_angle(ev_psi),
                                              section_of(info, ev_psi))
                    else:
                        event = CrossingEvent("conjugate", float(t_ev), wrap_positive(ev_theta), ev_l, wrap_angle(ev_psi))
                    recorded.append((float(t_ev), event))
            recorded.sort(key=lambda item: item[0])
            events.extend(event for _, event in recorded)

            if terminal_tag is not None and tags[terminal_tag][0] == "stop":
                name = tags[terminal_tag][1]
                t_stop = float(sol.t_events[terminal_tag][-1])
                y_stop = sol.y_events[terminal_tag][-1]
                stopped = CrossingEvent(name, t_stop, wrap_positive(float(y_stop[0])), float(y_stop[1]),
                                        wrap_angle(float(y_stop[2])), section_of(name, float(y_stop[2])))
                if not any(e.kind == name and abs(e.time - t_stop) < 1e-9 for e in events):
                    events.append(stopped)

            s = float(sol.t[-1])
            y_end = sol.y[:, -1]

            pairs = y_end[lay.jac].reshape(-1, 2).copy()
            acc = y_end[lay.acc].reshape(-1, 3).copy()
            if ric is not None:
                ric = (float(y_end[lay.ric]), ric[1])
            if chart == "surface":
                theta, l, psi = float(y_end[0]), float(y_end[1]), wrap_angle(float(y_end[2]))
            else:
                geo_bump = tuple(float(v) for v in y_end[0:4])
                theta, l = self.bump.from_chart(geo_bump[0], geo_bump[1])
                theta += self.theta_offset
                psi = self.bump.velocity_from_chart(geo_bump[2], geo_bump[3])

            if stopped is not None or terminal_tag is None:
                continue

            kind, info = tags[terminal_tag]
            if kind == "bump_enter":
                chart = "bump"
                geo_bump = self._enter_bump(theta, l, psi)
                self.metrics.increment_counter(self.names.flow_chart_switches())
                events.append(CrossingEvent("bump_enter", s, wrap_positive(theta), l, psi))
            elif kind == "bump_exit":
                chart = "surface"
                self.metrics.increment_counter(self.names.flow_chart_switches())
                events.append(CrossingEvent("bump_exit", s, wrap_positive(theta), l, psi))
            elif kind == "riccati_switch" and ric is not None:
                value = ric[0]
                ric = (1.0 / value, info) if value != 0.0 else (math.inf, info)
            # pole events are handled at the top of the next iteration
        else:
            raise IntegrationError(time=s, location={"theta": theta, "l": l},
                                   reason=f"segment limit {_MAX_SEGMENTS} reached")

        final = {"s": s, "theta": theta, "l": l, "psi": psi, "pairs": pairs, "acc": acc, "ric": ric}
        return segments, events, stopped, final

    def _enter_bump(self, theta: float, l: float, psi: float) -> Tuple[float, float, float, float]:
        bump = self.bump
        t, x = bump.to_chart(theta, l)
        # chart theta is reduced near the anchor; keep the unwrapped branch
        self.theta_offset = theta - bump.from_chart(t, x)[0]
        vt, vx = bump.velocity_to_chart(psi)
        g = bump.metric(t, x)
        norm = math.sqrt(g.g11 * vt * vt + 2.0 * g.g12 * vt * vx + g.g22 * vx * vx)
        return t, x, vt / norm, vx / norm

    def _location(self, chart: str, y: np.ndarray) -> Dict[str, float]:
        if chart == "surface":
            return {"theta": float(y[0]), "l": float(y[1]), "psi": float(y[2])}
        theta, l = self.bump.from_chart(float(y[0]), float(y[1]))
        return {"theta": theta, "l": l, "t": float(y[0]), "x": float(y[1])}

    def _pole_segment(self, s, theta, l, psi, at_end, pairs, acc, ric) -> _PoleSegment:
        r = self.surface.profile.evaluate(l)[0]
        c = r * math.sin(psi)
        magnitude, duration, _ = self.surface.passage(c, l, toward_end=at_end)
        dtheta = magnitude if c >= 0.0 else -magnitude
        K = self.surface.pole_curvature(at_end=at_end)
        return _PoleSegment(self.surface, at_end, s, duration, theta, l, psi, dtheta, K, pairs, acc, ric)


def _riccati_seed(u0: Optional[float]) -> Optional[Tuple[float, str]]:
    if u0 is None:
        return None
    if math.isinf(u0):
        return (0.0, "w")
    if abs(u0) > RICCATI_BLOWUP:
        return (1.0 / u0, "w")
    return (float(u0), "u")


@observed("integrate_geodesic")
def integrate_geodesic(
    surface: ProfileSurface,
    v0: GeodesicState,
    T: float,
    tol: Optional[FlowTolerance] = None,
    *,
    jacobi: Sequence[Tuple[float, float]] = (),
    accumulators: Optional[np.ndarray] = None,
    riccati: Optional[float] = None,
    t_eval: Optional[Sequence[float]] = None,
    stop: Optional[StopCondition] = None,
    record_levels: bool = True,
) -> Trajectory:
    """Integrate the geodesic through ``v0`` for arc-length time ``T``.

    Args:
        surface: Profile surface, possibly carrying a bump
        v0: Initial state; ``v0.s`` is the start time
        T: Duration (> 0)
        tol: Integrator tolerances
        jacobi: Initial (y, y') pairs co-integrated with the geodesic
        accumulators: Initial running integrals, shape (pairs, 3)
        riccati: Initial Riccati value u (inf starts at a conjugate point)
        t_eval: Sample times in [v0.s, v0.s + T]; defaults to the solver steps
        stop: Stop at the first matching crossing
        record_levels: Record alpha, beta, gamma0 and band-edge crossings

    Returns:
        Trajectory with samples, events and final linearized data

    Raises:
        IntegrationError: On step-size collapse
    """
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    tol = tol or FlowTolerance()
    pairs0 = np.array(jacobi, dtype=float).reshape(-1, 2)
    acc0 = np.zeros((pairs0.shape[0], 3)) if accumulators is None else np.asarray(accumulators, dtype=float).reshape(-1, 3)
    integrator = _Integrator(surface, tol, pairs0.shape[0], riccati is not None, stop, record_levels)
    segments, events, stopped, final = integrator.run(v0, T, pairs0, acc0, _riccati_seed(riccati))

    end_state = GeodesicState.from_psi(final["theta"], final["l"], final["psi"], final["s"])
    ric_final = RiccatiState(final["s"], final["ric"][0], final["ric"][1]) if final["ric"] is not None else None
    traj = Trajectory(
        surface=surface,
        start=v0,
        end=end_state,
        s=np.empty(0), theta=np.empty(0), l=np.empty(0), psi=np.empty(0),
        jacobi=np.empty((0, pairs0.shape[0], 2)),
        accumulators=np.empty((0, pairs0.shape[0], 3)),
        riccati=np.empty(0),
        riccati_chart=[],
        events=events,
        final_jacobi=final["pairs"],
        final_accumulators=final["acc"],
        final_riccati=ric_final,
        stopped_by=stopped,
        segments=segments,
    )

    if t_eval is None:
        times: List[float] = []
        for seg in segments:
            if isinstance(seg, _OdeSegment):
                times.extend(float(t) for t in seg.sol.ts if seg.t0 <= t <= seg.t1)
            else:
                times.extend([seg.t0, seg.t1])
        times.append(final["s"])
        grid = np.unique(np.array(times))
    else:
        grid = np.asarray(t_eval, dtype=float)
        grid = grid[(grid >= v0.s - 1e-12) & (grid <= final["s"] + 1e-12)]
    smp = traj.sample(grid)
    traj.s, traj.theta, traj.l, traj.psi = smp.s, smp.theta, smp.l, smp.psi
    traj.jacobi, traj.accumulators = smp.jacobi, smp.acc
    traj.riccati, traj.riccati_chart = smp.ric_value, smp.ric_chart
    return traj


# ==========================================================================
# Jacobi and Riccati views
# ==========================================================================


@dataclass
class JacobiSeries:
    """(y, y') along a trajectory plus the running integral of K y."""

    s: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    integral_ky: np.ndarray

    def states(self) -> List[JacobiState]:
        return [JacobiState(float(s), float(y), float(d)) for s, y, d in zip(self.s, self.y, self.dy)]

    @property
    def final(self) -> JacobiState:
        return JacobiState(float(self.s[-1]), float(self.y[-1]), float(self.dy[-1]))


@dataclass
class RiccatiSeries:
    """Riccati values along a trajectory with conjugate-point events."""

    s: np.ndarray
    values: np.ndarray
    charts: List[str]
    conjugate_times: List[float]

    def states(self) -> List[RiccatiState]:
        return [RiccatiState(float(s), float(v), c) for s, v, c in zip(self.s, self.values, self.charts)]

    def u(self) -> np.ndarray:
        return np.array([state.u for state in self.states()])

    @property
    def final(self) -> RiccatiState:
        return RiccatiState(float(self.s[-1]), float(self.values[-1]), self.charts[-1])


@observed("integrate_jacobi")
def integrate_jacobi(surface: ProfileSurface, trajectory: Trajectory, y0: float, dy0: float,
                     tol: Optional[FlowTolerance] = None) -> JacobiSeries:
    """Jacobi field with (y0, y0') along ``trajectory``, co-integrated with its geodesic."""
    traj = integrate_geodesic(surface, trajectory.start, trajectory.duration, tol,
                              jacobi=[(y0, dy0)], t_eval=trajectory.s, record_levels=False)
    return JacobiSeries(traj.s, traj.jacobi[:, 0, 0], traj.jacobi[:, 0, 1], traj.accumulators[:, 0, 0])


@observed("integrate_riccati")
def integrate_riccati(surface: ProfileSurface, trajectory: Trajectory, u0: float,
                      tol: Optional[FlowTolerance] = None) -> RiccatiSeries:
    """Riccati solution u' = -u^2 - K along ``trajectory`` starting at ``u0``."""
    traj = integrate_geodesic(surface, trajectory.start, trajectory.duration, tol,
                              riccati=u0, t_eval=trajectory.s, record_levels=False)
    conj = [e.time for e in traj.events if e.kind == "conjugate"]
    return RiccatiSeries(traj.s, traj.riccati, traj.riccati_chart, conj)


def wronskian(a: JacobiSeries, b: JacobiSeries) -> np.ndarray:
    """y_a y_b' - y_a' y_b along a common trajectory."""
    return a.y * b.dy - a.dy * b.y


# ==========================================================================
# Launching from points and poles
# ==========================================================================


def pole_distance(surface: ProfileSurface, l: float) -> Tuple[float, Optional[bool]]:
    """Distance to the nearest pole and which one (False = Q, True = P, None if not within POLE_RADIUS)."""
    if l <= POLE_RADIUS:
        return l, False
    if l >= surface.length - POLE_RADIUS:
        return surface.length - l, True
    return min(l, surface.length - l), None


def shoot(
    surface: ProfileSurface,
    theta: float,
    l: float,
    direction: float,
    T: float,
    tol: Optional[FlowTolerance] = None,
    *,
    jacobi: Sequence[Tuple[float, float]] = ((0.0, 1.0),),
    t_eval: Optional[Sequence[float]] = None,
    record_levels: bool = False,
) -> Trajectory:
    """Geodesic from the point (theta, l) with initial angle ``direction``, from time 0.

    At a point within ``POLE_RADIUS`` of a pole the point is moved onto the pole
    and ``direction`` is read as the meridian angle of departure; the first
    ``POLE_RADIUS`` of the path is taken along the meridian in closed form.
    """
    _, pole = pole_distance(surface, l)
    pairs0 = np.array(jacobi, dtype=float).reshape(-1, 2)
    if pole is None:
        v0 = GeodesicState.from_psi(theta, l, direction, 0.0)
        return integrate_geodesic(surface, v0, T, tol, jacobi=pairs0, t_eval=t_eval, record_levels=record_levels)
    eps = POLE_RADIUS
    K = surface.pole_curvature(at_end=pole)
    pairs, acc, _, _ = _constant_curvature_step(K, eps, pairs0, np.zeros((pairs0.shape[0], 3)), None)
    start_l = surface.length - eps if pole else eps
    v0 = GeodesicState.from_psi(direction, start_l, math.pi if pole else 0.0, eps)
    times = None if t_eval is None else [t for t in t_eval if t >= eps]
    return integrate_geodesic(surface, v0, max(T - eps, 1e-12), tol, jacobi=pairs, accumulators=acc,
                              t_eval=times, record_levels=record_levels)


__all__ = [
    "RICCATI_BLOWUP",
    "RICCATI_RETURN",
    "FlowTolerance",
    "CrossingEvent",
    "StopCondition",
    "section_of",
    "level_table",
    "Trajectory",
    "integrate_geodesic",
    "JacobiSeries",
    "RiccatiSeries",
    "integrate_jacobi",
    "integrate_riccati",
    "wronskian",
    "pole_distance",
    "shoot",
]
