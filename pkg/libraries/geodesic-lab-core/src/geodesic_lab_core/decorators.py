"""Declarative decorator for operation-level observability.

Usage:
    @observed("count_segments")
    def count_segments(surface, p, q, T, ...):
        ...

Each call gets a span, a call counter, an error counter and a latency
histogram, named by :class:`MetricNameStandardizer`.
"""
from __future__ import annotations

import functools
import logging
import time
from typing import Any, Callable, Optional

from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import (
    MetricsCollector,
    TraceContext,
    Tracer,
    get_global_metrics,
)

logger = logging.getLogger(__name__)


def observed(
    operation: Optional[str] = None,
    metrics_collector: Optional[MetricsCollector] = None,
    tracer: Optional[Tracer] = None,
):
    """Decorator that records metrics and a span for each call.

    Args:
        operation: Operation name (defaults to the function name)
        metrics_collector: Optional collector (defaults to the global one)
        tracer: Optional tracer (defaults to the global one)

    Returns:
        Decorated function
    """
    def decorator(func: Callable) -> Callable:
        name = operation or func.__name__

        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            metrics = metrics_collector or get_global_metrics()
            standardizer = get_metric_standardizer()
            metrics.increment_counter(standardizer.op_calls(name))
            start = time.perf_counter()
            with TraceContext(standardizer.op_span(name), tracer=tracer):
                try:
                    return func(*args, **kwargs)
                except Exception:
                    metrics.increment_counter(standardizer.op_errors(name))
                    raise
                finally:
                    elapsed_ms = (time.perf_counter() - start) * 1000
                    metrics.record_histogram(standardizer.op_latency_ms(name), elapsed_ms)
                    logger.debug(f"{name} finished in {elapsed_ms:.1f}ms")

        return wrapper

    return decorator


__all__ = [
    "observed",
]
