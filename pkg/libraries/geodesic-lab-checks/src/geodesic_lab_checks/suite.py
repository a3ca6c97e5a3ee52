"""Ordered collections of invariant checks for one experiment."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from geodesic_lab_core.exceptions import LabException
from geodesic_lab_core.executor import TaskOutcome
from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import MetricsCollector

from .invariant import CheckCategory, CheckResult, InvariantCheck

logger = logging.getLogger(__name__)


@dataclass
class CheckSuite:
    """Checks of one experiment in the order they were recorded."""

    experiment: str
    checks: List[InvariantCheck] = field(default_factory=list)
    metrics_collector: Optional[MetricsCollector] = None

    def add(self, check: InvariantCheck) -> InvariantCheck:
        if not check.experiment:
            check.experiment = self.experiment
            check.check_id = f"{self.experiment}/{check.name}"
        self.checks.append(check)
        if self.metrics_collector is not None:
            standardizer = get_metric_standardizer()
            self.metrics_collector.increment_counter(standardizer.checks_total())
            if not check.passed:
                self.metrics_collector.increment_counter(standardizer.checks_failed())
        return check

    def record(self, name: str, category: CheckCategory, passed: bool, reason: str,
               **kwargs: Any) -> InvariantCheck:
        return self.add(InvariantCheck.create(name, category, passed, reason, self.experiment, **kwargs))

    def compare(self, name: str, category: CheckCategory, measured: float, relation: str, bound: float,
                tolerance: float = 0.0, context: Optional[Dict[str, Any]] = None) -> InvariantCheck:
        return self.add(InvariantCheck.compare(name, category, measured, relation, bound, tolerance,
                                               self.experiment, context))

    def error(self, name: str, category: CheckCategory, error: Exception) -> InvariantCheck:
        if isinstance(error, LabException):
            logger.error(f"check {name} could not run: {error}")
        else:
            logger.error(f"check {name} could not run: {error}", exc_info=True)
        return self.add(InvariantCheck.errored(name, category, error, self.experiment))

    def failed_task(self, outcome: TaskOutcome, category: CheckCategory) -> InvariantCheck:
        """Record an executor task that raised, keeping its error code."""
        logger.error(f"task {outcome.name} failed: [{outcome.error_code}] {outcome.error_message}")
        check = InvariantCheck.create(f"task/{outcome.name}", category, False,
                                      outcome.error_message or "task failed", self.experiment,
                                      context={"error_code": outcome.error_code})
        check.result = CheckResult.ERROR
        return self.add(check)

    def extend(self, checks: Iterable[InvariantCheck]) -> None:
        for check in checks:
            self.add(check)

    def from_outcomes(self, outcomes: Iterable[Any], category: CheckCategory = CheckCategory.SURFACE) -> None:
        """Record objects with ``name``, ``passed``, ``message`` and ``details`` (surface invariants)."""
        for outcome in outcomes:
            self.record(outcome.name, category, outcome.passed, outcome.message,
                        context=dict(getattr(outcome, "details", {}) or {}))

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[InvariantCheck]:
        return [check for check in self.checks if not check.passed]

    def summary(self) -> Dict[str, Any]:
        counts = {result.value: 0 for result in CheckResult}
        for check in self.checks:
            counts[check.result.value] += 1
        return {
            "experiment": self.experiment,
            "total": len(self.checks),
            "counts": counts,
            "passed": self.passed,
            "checks": {check.name: check.result.value for check in self.checks},
        }

    def to_rows(self) -> List[Dict[str, Any]]:
        return [check.to_dict() for check in self.checks]
