"""Experiment task execution with timeout and error handling.

Numerical tasks are synchronous and CPU-bound; they run on a shared thread
pool and are awaited with ``asyncio``. Results come back in submission order
regardless of completion order, and a failing task never aborts its siblings.
"""
from __future__ import annotations

import asyncio
import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from geodesic_lab_core.exceptions import LabException, TaskExecutionError, TaskTimeoutError
from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import ErrorTracker, MetricsCollector, TraceContext

logger = logging.getLogger(__name__)


@dataclass
class Task:
    """One named unit of experiment work."""

    name: str
    func: Callable[..., Any]
    args: tuple = ()
    kwargs: Dict[str, Any] = field(default_factory=dict)


@dataclass
class TaskOutcome:
    """Result of a task: either ``result`` or an error description."""

    name: str
    ok: bool
    result: Any = None
    error_code: Optional[str] = None
    error_message: Optional[str] = None
    duration_ms: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ok": self.ok,
            "error_code": self.error_code,
            "error_message": self.error_message,
            "duration_ms": self.duration_ms,
        }


def _record(metrics: Optional[MetricsCollector], task_name: str, ok: bool, elapsed: float) -> None:
    if metrics is None:
        return
    standardizer = get_metric_standardizer()
    metrics.increment_counter(standardizer.task_runs(task_name))
    if ok:
        metrics.increment_counter(standardizer.task_success(task_name))
    else:
        metrics.increment_counter(standardizer.task_errors(task_name))
    metrics.record_histogram(standardizer.task_latency_ms(task_name), elapsed * 1000)


async def execute_task_with_timeout(
    task: Task,
    pool: Optional[concurrent.futures.Executor] = None,
    timeout_seconds: Optional[float] = None,
    metrics_collector: Optional[MetricsCollector] = None,
) -> Any:
    """Execute a synchronous task on ``pool`` with timeout protection.

    Args:
        task: Task to run
        pool: Executor to run on (defaults to the loop's default executor)
        timeout_seconds: Timeout in seconds (None means no limit)
        metrics_collector: Optional collector for task metrics

    Returns:
        Task result

    Raises:
        TaskTimeoutError: If the task exceeds ``timeout_seconds``
        TaskExecutionError: If the task raises a non-lab exception
        LabException: Lab errors are re-raised unchanged
    """
    loop = asyncio.get_running_loop()
    start_time = time.time()
    try:
        future = loop.run_in_executor(pool, lambda: task.func(*task.args, **task.kwargs))
        result = await asyncio.wait_for(future, timeout=timeout_seconds)
        elapsed = time.time() - start_time
        logger.debug(f"Task {task.name} finished in {elapsed:.2f}s")
        _record(metrics_collector, task.name, True, elapsed)
        return result

    except asyncio.TimeoutError:
        elapsed = time.time() - start_time
        logger.error(f"Task {task.name} timed out after {elapsed:.2f}s (limit: {timeout_seconds}s)")
        _record(metrics_collector, task.name, False, elapsed)
        raise TaskTimeoutError(
            task_name=task.name,
            timeout_seconds=timeout_seconds,
            details={"execution_time": elapsed},
        )

    except LabException:
        _record(metrics_collector, task.name, False, time.time() - start_time)
        raise

    except Exception as e:
        elapsed = time.time() - start_time
        logger.error(f"Task {task.name} failed after {elapsed:.2f}s: {e}", exc_info=True)
        _record(metrics_collector, task.name, False, elapsed)
        raise TaskExecutionError(
            task_name=task.name,
            reason=str(e),
            details={"execution_time": elapsed, "original_error": type(e).__name__},
        )


def execute_task_sync(
    task: Task,
    timeout_seconds: Optional[float] = None,
    metrics_collector: Optional[MetricsCollector] = None,
) -> Any:
    """Execute a task synchronously in a one-worker pool with timeout protection."""
    start_time = time.time()
    try:
        with concurrent.futures.ThreadPoolExecutor(max_workers=1) as pool:
            future = pool.submit(task.func, *task.args, **task.kwargs)
            result = future.result(timeout=timeout_seconds)
        _record(metrics_collector, task.name, True, time.time() - start_time)
        return result

    except concurrent.futures.TimeoutError:
        _record(metrics_collector, task.name, False, time.time() - start_time)
        raise TaskTimeoutError(task_name=task.name, timeout_seconds=timeout_seconds)

    except LabException:
        _record(metrics_collector, task.name, False, time.time() - start_time)
        raise

    except Exception as e:
        _record(metrics_collector, task.name, False, time.time() - start_time)
        raise TaskExecutionError(
            task_name=task.name,
            reason=str(e),
            details={"original_error": type(e).__name__},
        )


async def run_tasks_async(
    tasks: Sequence[Task],
    threads: int = 1,
    timeout_seconds: Optional[float] = None,
    metrics_collector: Optional[MetricsCollector] = None,
    error_tracker: Optional[ErrorTracker] = None,
) -> List[TaskOutcome]:
    """Run tasks concurrently and return outcomes in submission order."""
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as pool:

        async def _one(task: Task) -> TaskOutcome:
            start = time.time()
            with TraceContext(f"lab.task.{task.name}") as span:
                try:
                    result = await execute_task_with_timeout(
                        task, pool=pool, timeout_seconds=timeout_seconds,
                        metrics_collector=metrics_collector,
                    )
                    return TaskOutcome(
                        name=task.name, ok=True, result=result,
                        duration_ms=(time.time() - start) * 1000,
                    )
                except LabException as e:
                    span.tags["error_code"] = e.error_code
                    if error_tracker is not None:
                        error_tracker.record_error(e, task_name=task.name)
                    return TaskOutcome(
                        name=task.name, ok=False,
                        error_code=e.error_code, error_message=e.message,
                        duration_ms=(time.time() - start) * 1000,
                    )

        return list(await asyncio.gather(*(_one(t) for t in tasks)))


def run_tasks(
    tasks: Sequence[Task],
    threads: int = 1,
    timeout_seconds: Optional[float] = None,
    metrics_collector: Optional[MetricsCollector] = None,
    error_tracker: Optional[ErrorTracker] = None,
) -> List[TaskOutcome]:
    """Blocking entry point for :func:`run_tasks_async`."""
    return asyncio.run(
        run_tasks_async(
            tasks, threads=threads, timeout_seconds=timeout_seconds,
            metrics_collector=metrics_collector, error_tracker=error_tracker,
        )
    )


__all__ = [
    "Task",
    "TaskOutcome",
    "execute_task_with_timeout",
    "execute_task_sync",
    "run_tasks_async",
    "run_tasks",
]
