"""Run-scoped observability: run IDs, metrics, spans and error aggregation.

Numerical operations report to the *global* collector and tracer. A
:class:`RunContext` given its own collector and tracer installs them for the
duration of one experiment run, so every run gets isolated numbers.
"""
from __future__ import annotations

import logging
import threading
import time
import traceback
import uuid
from collections import defaultdict, deque
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class ObservabilityConfig:
    """Sizes of the in-memory buffers."""

    metrics_max_samples: int = 1000
    error_tracker_max_errors: int = 1000
    tracer_max_spans: int = 5000

    def create_metrics_collector(self) -> "MetricsCollector":
        return MetricsCollector(max_samples=self.metrics_max_samples)

    def create_error_tracker(self) -> "ErrorTracker":
        return ErrorTracker(max_errors=self.error_tracker_max_errors)

    def create_tracer(self) -> "Tracer":
        return Tracer(max_spans=self.tracer_max_spans)


_run_id: ContextVar[Optional[str]] = ContextVar("run_id", default=None)


def generate_run_id() -> str:
    return uuid.uuid4().hex


def get_run_id() -> Optional[str]:
    return _run_id.get()


def set_run_id(run_id: Optional[str]) -> None:
    _run_id.set(run_id)


# ==========================================================================
# Metrics
# ==========================================================================


def _percentile(ordered: List[float], q: float) -> float:
    return ordered[min(int(len(ordered) * q), len(ordered) - 1)]


class MetricsCollector:
    """Thread-safe counters, gauges and bounded histograms."""

    def __init__(self, max_samples: int = 1000) -> None:
        self._counters: Dict[str, float] = defaultdict(float)
        self._gauges: Dict[str, float] = {}
        self._histograms: Dict[str, Deque[float]] = defaultdict(lambda: deque(maxlen=max_samples))
        self._lock = threading.Lock()

    def increment_counter(self, name: str, value: float = 1.0) -> None:
        with self._lock:
            self._counters[name] += value

    def set_gauge(self, name: str, value: float) -> None:
        with self._lock:
            self._gauges[name] = float(value)

    def record_histogram(self, name: str, value: float) -> None:
        with self._lock:
            self._histograms[name].append(float(value))

    def get_counter(self, name: str) -> float:
        with self._lock:
            return self._counters.get(name, 0.0)

    def get_gauge(self, name: str) -> Optional[float]:
        with self._lock:
            return self._gauges.get(name)

    def get_histogram_values(self, name: str) -> List[float]:
        with self._lock:
            return list(self._histograms.get(name, ()))

    def histogram_summary(self, name: str) -> Dict[str, float]:
        """count, min, max, mean, p50 and p95 of the retained samples."""
        ordered = sorted(self.get_histogram_values(name))
        if not ordered:
            return {"count": 0}
        return {
            "count": len(ordered),
            "min": ordered[0],
            "max": ordered[-1],
            "mean": sum(ordered) / len(ordered),
            "p50": _percentile(ordered, 0.50),
            "p95": _percentile(ordered, 0.95),
        }

    def get_all_metrics(self) -> Dict[str, Any]:
        with self._lock:
            counters = dict(self._counters)
            gauges = dict(self._gauges)
            names = list(self._histograms)
        return {
            "counters": counters,
            "gauges": gauges,
            "histograms": {name: self.histogram_summary(name) for name in names},
        }


# ==========================================================================
# Error tracking
# ==========================================================================


@dataclass
class ErrorRecord:
    """One recorded failure; lab errors keep their code and details."""

    error_type: str
    error_code: Optional[str]
    message: str
    run_id: Optional[str]
    task_name: Optional[str]
    details: Dict[str, Any] = field(default_factory=dict)
    stack_trace: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": self.error_type,
            "error_code": self.error_code,
            "message": self.message[:200],
            "run_id": self.run_id,
            "task_name": self.task_name,
            "details": self.details,
        }


class ErrorTracker:
    """Collects failures of a run, counted by error code."""

    def __init__(self, max_errors: int = 1000) -> None:
        self._errors: Deque[ErrorRecord] = deque(maxlen=max_errors)
        self._counts: Dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    def record_error(
        self,
        error: Exception,
        run_id: Optional[str] = None,
        task_name: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
    ) -> ErrorRecord:
        code = getattr(error, "error_code", None)
        details = dict(getattr(error, "details", None) or {})
        details.update(context or {})
        record = ErrorRecord(
            error_type=type(error).__name__,
            error_code=code,
            message=getattr(error, "message", None) or str(error),
            run_id=run_id or get_run_id(),
            task_name=task_name,
            details=details,
            # stack traces only for non-lab errors
            stack_trace=None if code else "".join(
                traceback.format_exception(type(error), error, error.__traceback__)),
        )
        with self._lock:
            self._counts[code or record.error_type] += 1
            self._errors.append(record)
        logger.error(f"[{code or record.error_type}] {record.message} (task={task_name}, run={record.run_id})")
        return record

    @property
    def errors(self) -> List[ErrorRecord]:
        with self._lock:
            return list(self._errors)

    def get_error_summary(self, recent: int = 10) -> Dict[str, Any]:
        with self._lock:
            return {
                "total_errors": sum(self._counts.values()),
                "by_code": dict(self._counts),
                "recent_errors": [e.to_dict() for e in list(self._errors)[-recent:]],
            }


# ==========================================================================
# Tracing
# ==========================================================================


@dataclass
class Span:
    name: str
    start_time: float
    run_id: Optional[str] = None
    end_time: Optional[float] = None
    span_id: str = field(default_factory=lambda: uuid.uuid4().hex[:16])
    tags: Dict[str, Any] = field(default_factory=dict)

    @property
    def duration_ms(self) -> Optional[float]:
        if self.end_time is None:
            return None
        return (self.end_time - self.start_time) * 1000


class Tracer:
    """Keeps finished spans; summarises them per operation name."""

    def __init__(self, max_spans: int = 5000) -> None:
        self._spans: Deque[Span] = deque(maxlen=max_spans)
        self._lock = threading.Lock()

    def start_span(self, name: str, run_id: Optional[str] = None,
                   tags: Optional[Dict[str, Any]] = None) -> Span:
        return Span(name=name, start_time=time.perf_counter(), run_id=run_id or get_run_id(),
                    tags=dict(tags or {}))

    def end_span(self, span: Span) -> None:
        span.end_time = time.perf_counter()
        with self._lock:
            self._spans.append(span)

    def get_trace(self, run_id: str) -> List[Span]:
        with self._lock:
            return [s for s in self._spans if s.run_id == run_id]

    def get_recent_spans(self, limit: int = 100) -> List[Span]:
        with self._lock:
            return list(self._spans)[-limit:]

    def summary(self, run_id: Optional[str] = None) -> Dict[str, Dict[str, float]]:
        """Per span name: count, total milliseconds and failures."""
        with self._lock:
            spans = [s for s in self._spans if run_id is None or s.run_id == run_id]
        out: Dict[str, Dict[str, float]] = {}
        for span in spans:
            entry = out.setdefault(span.name, {"count": 0, "total_ms": 0.0, "errors": 0})
            entry["count"] += 1
            entry["total_ms"] += span.duration_ms or 0.0
            entry["errors"] += int("error" in span.tags)
        return out


_global_tracer: Optional[Tracer] = None
_global_metrics: Optional[MetricsCollector] = None


def get_global_tracer() -> Tracer:
    global _global_tracer
    if _global_tracer is None:
        _global_tracer = Tracer()
    return _global_tracer


def set_global_tracer(tracer: Optional[Tracer]) -> None:
    global _global_tracer
    _global_tracer = tracer


def get_global_metrics() -> MetricsCollector:
    global _global_metrics
    if _global_metrics is None:
        _global_metrics = MetricsCollector()
    return _global_metrics


def set_global_metrics(collector: Optional[MetricsCollector]) -> None:
    global _global_metrics
    _global_metrics = collector


class TraceContext:
    """``with TraceContext("lab.op.x"):`` records one span, tagged on failure."""

    def __init__(
        self,
        name: str,
        run_id: Optional[str] = None,
        tags: Optional[Dict[str, Any]] = None,
        tracer: Optional[Tracer] = None,
    ) -> None:
        self.name = name
        self.run_id = run_id
        self.tags = tags
        self.span: Optional[Span] = None
        self._tracer = tracer or get_global_tracer()

    def __enter__(self) -> Span:
        self.span = self._tracer.start_span(self.name, run_id=self.run_id, tags=self.tags)
        return self.span

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self.span is not None:
            if exc_type is not None:
                self.span.tags["error"] = exc_type.__name__
            self._tracer.end_span(self.span)


class RunContext:
    """Sets the run ID and, when given, installs a run's collector and tracer.

    ``with RunContext(metrics=collector, tracer=tracer) as run:`` routes every
    ``observed`` operation of the run to ``collector``/``tracer``; the previous
    globals come back on exit.
    """

    def __init__(
        self,
        run_id: Optional[str] = None,
        metrics: Optional[MetricsCollector] = None,
        tracer: Optional[Tracer] = None,
    ) -> None:
        self.run_id = run_id
        self.metrics = metrics
        self.tracer = tracer
        self._saved: Optional[tuple] = None

    def __enter__(self) -> "RunContext":
        self.run_id = self.run_id or generate_run_id()
        self._token = _run_id.set(self.run_id)
        self._saved = (_global_metrics, _global_tracer)
        if self.metrics is not None:
            set_global_metrics(self.metrics)
        if self.tracer is not None:
            set_global_tracer(self.tracer)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        _run_id.reset(self._token)
        metrics, tracer = self._saved
        if self.metrics is not None:
            set_global_metrics(metrics)
        if self.tracer is not None:
            set_global_tracer(tracer)
