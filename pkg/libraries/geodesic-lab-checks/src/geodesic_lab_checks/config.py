"""Configuration for check components."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from geodesic_lab_core.observability import MetricsCollector

from .check_logger import CheckLogger
from .suite import CheckSuite


@dataclass
class ChecksConfig:
    """Where and how checks are logged."""

    check_log_file: Optional[Path] = None
    check_log_batch_size: int = 100

    def create_check_logger(
        self, metrics_callback: Optional[Callable[[str, float], None]] = None
    ) -> CheckLogger:
        """Create a CheckLogger with this configuration."""
        return CheckLogger(
            log_file=self.check_log_file,
            batch_size=self.check_log_batch_size,
            metrics_callback=metrics_callback,
        )

    def create_suite(self, experiment: str, metrics_collector: Optional[MetricsCollector] = None) -> CheckSuite:
        """Create an empty CheckSuite for ``experiment``."""
        return CheckSuite(experiment, metrics_collector=metrics_collector)
