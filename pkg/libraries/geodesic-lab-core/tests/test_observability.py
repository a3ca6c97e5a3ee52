"""Unit tests for core observability primitives."""
from geodesic_lab_core.observability import (
    RunContext,
    generate_run_id,
    get_run_id,
    set_run_id,
    MetricsCollector,
    ErrorTracker,
    Tracer,
    TraceContext,
    ObservabilityConfig,
    get_global_metrics,
    get_global_tracer,
)
from geodesic_lab_core.exceptions import DomainError


class TestRunContext:
    """Test run ID context management."""

    def test_generate_run_id(self):
        """Run IDs are unique."""
        assert generate_run_id() != generate_run_id()

    def test_get_set_run_id(self):
        """Can get and set run ID."""
        assert get_run_id() is None
        set_run_id("run-1")
        assert get_run_id() == "run-1"
        set_run_id(None)
        assert get_run_id() is None

    def test_run_context_restores(self):
        """RunContext sets and restores the run ID."""
        with RunContext("ctx-1") as ctx:
            assert get_run_id() == "ctx-1"
            assert ctx.run_id == "ctx-1"
        assert get_run_id() is None

    def test_run_context_auto_generate(self):
        """RunContext generates an ID if not provided."""
        with RunContext() as ctx:
            assert ctx.run_id is not None
            assert get_run_id() == ctx.run_id


class TestMetricsCollector:
    """Test metrics collection."""

    def test_counter_and_gauge(self):
        """Counters accumulate and gauges overwrite."""
        collector = MetricsCollector()
        collector.increment_counter("c")
        collector.increment_counter("c", 2.5)
        collector.set_gauge("g", 1.0)
        collector.set_gauge("g", 7.0)
        assert collector.get_counter("c") == 3.5
        assert collector.get_gauge("g") == 7.0

    def test_histogram_summary(self):
        """Histogram summaries report count, min, max and avg."""
        collector = MetricsCollector()
        for v in (10.0, 20.0, 30.0):
            collector.record_histogram("h", v)
        summary = collector.get_all_metrics()["histograms"]["h"]
        assert summary["count"] == 3
        assert summary["min"] == 10.0
        assert summary["max"] == 30.0
        assert summary["mean"] == 20.0
        assert summary["p50"] == 20.0

    def test_max_samples(self):
        """Histograms keep at most max_samples values."""
        collector = ObservabilityConfig(metrics_max_samples=2).create_metrics_collector()
        for v in range(5):
            collector.record_histogram("h", float(v))
        assert collector.get_histogram_values("h") == [3.0, 4.0]


class TestErrorTracker:
    """Test error tracking."""

    def test_records_error_code(self):
        """Lab error codes are captured in the summary."""
        tracker = ErrorTracker()
        tracker.record_error(DomainError(l=9.0, length=5.0), task_name="profile_eval")
        summary = tracker.get_error_summary()
        assert summary["total_errors"] == 1
        assert summary["recent_errors"][0]["error_code"] == "SURFACE_100"
        assert summary["recent_errors"][0]["task_name"] == "profile_eval"

    def test_repeated_errors_counted(self):
        """Identical errors are aggregated."""
        tracker = ErrorTracker()
        for _ in range(3):
            tracker.record_error(ValueError("same"))
        assert tracker.get_error_summary()["by_code"]["ValueError"] == 3


class TestTracer:
    """Test span tracing."""

    def test_span_lifecycle(self):
        """Spans have a duration after ending."""
        tracer = Tracer()
        span = tracer.start_span("op", run_id="r1")
        tracer.end_span(span)
        assert span.duration_ms is not None
        assert tracer.get_trace("r1") == [span]

    def test_trace_context_picks_up_run_id(self):
        """TraceContext attaches the current run ID and error tags."""
        tracer = Tracer()
        with RunContext("r2"):
            try:
                with TraceContext("failing", tracer=tracer):
                    raise RuntimeError("boom")
            except RuntimeError:
                pass
        spans = tracer.get_trace("r2")
        assert len(spans) == 1
        assert spans[0].tags["error"] == "RuntimeError"

    def test_summary_per_name(self):
        """Spans are summarised per operation name."""
        tracer = Tracer()
        for _ in range(3):
            with TraceContext("lab.op.shoot", tracer=tracer):
                pass
        summary = tracer.summary()
        assert summary["lab.op.shoot"]["count"] == 3
        assert summary["lab.op.shoot"]["errors"] == 0


class TestRunIsolation:
    """Test per-run collectors."""

    def test_run_context_installs_collectors(self):
        """Globals point at the run's collector and tracer, then come back."""
        before = get_global_metrics()
        metrics, tracer = MetricsCollector(), Tracer()
        with RunContext(metrics=metrics, tracer=tracer):
            assert get_global_metrics() is metrics
            assert get_global_tracer() is tracer
            with TraceContext("lab.op.inside"):
                get_global_metrics().increment_counter("inside")
        assert get_global_metrics() is before
        assert metrics.get_counter("inside") == 1.0
        assert "lab.op.inside" in tracer.summary()

    def test_lab_error_details(self):
        """Lab errors keep their details and no stack trace."""
        record = ErrorTracker().record_error(DomainError(l=9.0, length=5.0))
        assert record.stack_trace is None
        assert record.details["l"] == 9.0
