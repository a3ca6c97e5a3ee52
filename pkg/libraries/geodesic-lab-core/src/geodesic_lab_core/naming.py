"""Metric and span name standardization.

All names follow the pattern: {prefix}.{entity}.{name}.{measure} so that run
metrics from different experiments line up in ``metrics.json``.
"""
from __future__ import annotations

from typing import Optional


class MetricNameStandardizer:
    """Standardizes metric and span names across operations and tasks."""

    def __init__(self, service_name: str = "lab"):
        """Initialize name standardizer.

        Args:
            service_name: Prefix for every name (e.g., "lab")
        """
        self.service_name = service_name

    # ============================================================================
    # Operation Metrics
    # ============================================================================

    def op_calls(self, operation: str) -> str:
        """Operation call counter: {prefix}.op.{operation}.calls"""
        return f"{self.service_name}.op.{operation}.calls"

    def op_errors(self, operation: str) -> str:
        """Operation error counter: {prefix}.op.{operation}.errors"""
        return f"{self.service_name}.op.{operation}.errors"

    def op_latency_ms(self, operation: str) -> str:
        """Operation latency histogram: {prefix}.op.{operation}.latency_ms"""
        return f"{self.service_name}.op.{operation}.latency_ms"

    def op_span(self, operation: str) -> str:
        """Operation span: {prefix}.op.{operation}"""
        return f"{self.service_name}.op.{operation}"

    # ============================================================================
    # Task Metrics
    # ============================================================================

    def task_runs(self, task_name: str) -> str:
        """Task run counter: {prefix}.task.{task_name}.runs"""
        return f"{self.service_name}.task.{task_name}.runs"

    def task_success(self, task_name: str) -> str:
        """Task success counter: {prefix}.task.{task_name}.success"""
        return f"{self.service_name}.task.{task_name}.success"

    def task_errors(self, task_name: str) -> str:
        """Task error counter: {prefix}.task.{task_name}.errors"""
        return f"{self.service_name}.task.{task_name}.errors"

    def task_latency_ms(self, task_name: str) -> str:
        """Task latency histogram: {prefix}.task.{task_name}.latency_ms"""
        return f"{self.service_name}.task.{task_name}.latency_ms"

    # ============================================================================
    # Flow Metrics
    # ============================================================================

    def flow_segments(self) -> str:
        """Integrator segment counter: {prefix}.flow.segments"""
        return f"{self.service_name}.flow.segments"

    def flow_chart_switches(self) -> str:
        """Chart switch counter: {prefix}.flow.chart_switches"""
        return f"{self.service_name}.flow.chart_switches"

    def flow_rhs_evaluations(self) -> str:
        """Right-hand-side evaluation counter: {prefix}.flow.rhs_evaluations"""
        return f"{self.service_name}.flow.rhs_evaluations"

    # ============================================================================
    # Check Metrics
    # ============================================================================

    def checks_total(self) -> str:
        """Invariant checks run: {prefix}.checks.total"""
        return f"{self.service_name}.checks.total"

    def checks_failed(self) -> str:
        """Invariant checks failed: {prefix}.checks.failed"""
        return f"{self.service_name}.checks.failed"

    def check_log_flush_latency_ms(self) -> str:
        """Check log flush latency: {prefix}.checks.flush_latency_ms"""
        return f"{self.service_name}.checks.flush_latency_ms"


# Global instance for convenience (can be overridden)
_global_standardizer: Optional[MetricNameStandardizer] = None


def get_metric_standardizer(service_name: str = "lab") -> MetricNameStandardizer:
    """Get or create global metric name standardizer."""
    global _global_standardizer
    if _global_standardizer is None:
        _global_standardizer = MetricNameStandardizer(service_name=service_name)
    return _global_standardizer


def set_metric_standardizer(standardizer: MetricNameStandardizer) -> None:
    """Set global metric name standardizer (for testing)."""
    global _global_standardizer
    _global_standardizer = standardizer


__all__ = [
    "MetricNameStandardizer",
    "get_metric_standardizer",
    "set_metric_standardizer",
]
