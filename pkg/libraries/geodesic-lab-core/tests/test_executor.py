"""Unit tests for task execution."""
import time

import pytest

from geodesic_lab_core.decorators import observed
from geodesic_lab_core.exceptions import DomainError, TaskExecutionError, TaskTimeoutError
from geodesic_lab_core.executor import Task, execute_task_sync, execute_task_with_timeout, run_tasks
from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import ErrorTracker, MetricsCollector, Tracer


def _slow(x, delay):
    time.sleep(delay)
    return x


def _fail():
    raise ValueError("bad input")


def _domain():
    raise DomainError(l=-1.0, length=2.0)


class TestExecuteTask:
    """Test single task execution."""

    @pytest.mark.asyncio
    async def test_success_records_metrics(self):
        """Successful tasks return and count success."""
        metrics = MetricsCollector()
        result = await execute_task_with_timeout(Task("t", _slow, (3, 0.0)), metrics_collector=metrics)
        assert result == 3
        assert metrics.get_counter(get_metric_standardizer().task_success("t")) == 1.0

    @pytest.mark.asyncio
    async def test_timeout(self):
        """Slow tasks raise TaskTimeoutError."""
        with pytest.raises(TaskTimeoutError):
            await execute_task_with_timeout(Task("slow", _slow, (1, 0.5)), timeout_seconds=0.05)

    @pytest.mark.asyncio
    async def test_wraps_foreign_errors(self):
        """Non-lab errors are wrapped as TaskExecutionError."""
        with pytest.raises(TaskExecutionError):
            await execute_task_with_timeout(Task("fail", _fail))

    def test_sync_keeps_lab_errors(self):
        """Lab errors pass through unchanged."""
        with pytest.raises(DomainError):
            execute_task_sync(Task("domain", _domain))


class TestRunTasks:
    """Test concurrent task runs."""

    def test_order_preserved(self):
        """Outcomes follow submission order, not completion order."""
        tasks = [Task(f"t{i}", _slow, (i, 0.05 * (3 - i))) for i in range(3)]
        outcomes = run_tasks(tasks, threads=3)
        assert [o.result for o in outcomes] == [0, 1, 2]
        assert all(o.ok for o in outcomes)

    def test_failure_isolated(self):
        """A failing task does not abort its siblings."""
        tracker = ErrorTracker()
        outcomes = run_tasks(
            [Task("ok", _slow, (1, 0.0)), Task("bad", _fail), Task("ok2", _slow, (2, 0.0))],
            threads=2,
            error_tracker=tracker,
        )
        assert [o.ok for o in outcomes] == [True, False, True]
        assert outcomes[1].error_code == "TASK_700"
        assert tracker.get_error_summary()["total_errors"] == 1


class TestObserved:
    """Test the observed decorator."""

    def test_counts_calls_and_errors(self):
        """Calls, errors and latency are recorded."""
        metrics = MetricsCollector()
        tracer = Tracer()

        @observed("nonnegative", metrics_collector=metrics, tracer=tracer)
        def nonnegative(x):
            if x < 0:
                raise ValueError("negative")
            return x

        names = get_metric_standardizer()
        assert nonnegative(2) == 2
        with pytest.raises(ValueError):
            nonnegative(-1)
        assert metrics.get_counter(names.op_calls("nonnegative")) == 2.0
        assert metrics.get_counter(names.op_errors("nonnegative")) == 1.0
        assert len(metrics.get_histogram_values(names.op_latency_ms("nonnegative"))) == 2
        assert len(tracer.get_recent_spans()) == 2
