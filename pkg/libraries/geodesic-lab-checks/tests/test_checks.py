"""Unit tests for check components."""
import json
import math
from pathlib import Path
from tempfile import TemporaryDirectory

import pytest

from geodesic_lab_checks import (
    CheckCategory,
    CheckLogger,
    CheckResult,
    ChecksConfig,
    CheckSuite,
    InvariantCheck,
)
from geodesic_lab_core.exceptions import SeparatrixError
from geodesic_lab_core.executor import TaskOutcome
from geodesic_lab_core.observability import MetricsCollector


class _Outcome:
    def __init__(self, name, passed, message):
        self.name = name
        self.passed = passed
        self.message = message
        self.details = {"where": 1.0}


class TestInvariantCheck:
    """Test InvariantCheck records."""

    def test_create_check(self):
        """Can create check records."""
        check = InvariantCheck.create("poles", CheckCategory.SURFACE, True, "r(0) = 0", experiment="check-surface")
        assert check.result == CheckResult.PASS
        assert check.check_id == "check-surface/poles"

    def test_compare_within_tolerance(self):
        """Comparisons honour the tolerance."""
        check = InvariantCheck.compare("area", CheckCategory.COUNTING, 12.5664, "==", 4 * math.pi, 1e-3)
        assert check.passed
        assert not InvariantCheck.compare("gap", CheckCategory.HOMOCLINIC, 2e-7, "<=", 1e-7).passed

    def test_nan_fails(self):
        """A NaN measurement never passes."""
        assert not InvariantCheck.compare("rate", CheckCategory.GROWTH, float("nan"), "<", 1.0).passed

    def test_unknown_relation(self):
        """Only known relations are accepted."""
        with pytest.raises(ValueError):
            InvariantCheck.compare("x", CheckCategory.FLOW, 1.0, "~", 1.0)

    def test_to_dict(self):
        """Can convert a check to a dictionary."""
        data = InvariantCheck.compare("drift", CheckCategory.FLOW, 1e-9, "<=", 1e-8).to_dict()
        assert data["category"] == "flow"
        assert data["result"] == "pass"
        assert "timestamp" not in data

    def test_infinite_values_serialize_as_null(self):
        """Infinite measurements become null."""
        data = InvariantCheck.compare("t0", CheckCategory.SECTIONS, math.inf, "<=", 1.0).to_dict()
        assert data["measured"] is None

    def test_errored(self):
        """Errors keep the lab error code."""
        check = InvariantCheck.errored("trace", CheckCategory.HOMOCLINIC, SeparatrixError("re-seed"))
        assert check.result == CheckResult.ERROR
        assert check.context["error_code"] == "HOMOCLINIC_500"


class TestCheckSuite:
    """Test CheckSuite."""

    def test_passed_and_failures(self):
        """The suite passes only when every check passes."""
        suite = CheckSuite("count")
        suite.compare("a", CheckCategory.COUNTING, 5, "==", 5)
        assert suite.passed
        suite.compare("b", CheckCategory.COUNTING, 4, "==", 5)
        assert not suite.passed
        assert [c.name for c in suite.failures] == ["b"]

    def test_summary_counts(self):
        """The summary counts results by kind."""
        suite = CheckSuite("trace")
        suite.record("ok", CheckCategory.FLOW, True, "fine")
        suite.error("bad", CheckCategory.FLOW, RuntimeError("boom"))
        summary = suite.summary()
        assert summary["counts"] == {"pass": 1, "fail": 0, "error": 1}
        assert summary["checks"] == {"ok": "pass", "bad": "error"}

    def test_from_outcomes(self):
        """Surface invariant outcomes become checks."""
        suite = CheckSuite("check-surface")
        suite.from_outcomes([_Outcome("poles", True, "ok"), _Outcome("neck", False, "too wide")])
        assert [c.result for c in suite.checks] == [CheckResult.PASS, CheckResult.FAIL]
        assert suite.checks[1].context == {"where": 1.0}

    def test_failed_task(self):
        """A failed task becomes an error check with its code."""
        suite = CheckSuite("splitting")
        suite.failed_task(TaskOutcome("gap_A0.05", ok=False, error_code="FLOW_200", error_message="step collapse"),
                          CheckCategory.HOMOCLINIC)
        check = suite.checks[0]
        assert check.name == "task/gap_A0.05"
        assert check.result == CheckResult.ERROR
        assert check.context["error_code"] == "FLOW_200"

    def test_metrics(self):
        """Checks are counted in the metrics collector."""
        metrics = MetricsCollector()
        suite = CheckSuite("count", metrics_collector=metrics)
        suite.compare("a", CheckCategory.COUNTING, 1.0, "<", 0.0)
        assert metrics.get_counter("lab.checks.total") == 1
        assert metrics.get_counter("lab.checks.failed") == 1


class TestCheckLogger:
    """Test CheckLogger."""

    @pytest.mark.asyncio
    async def test_log_check(self):
        """Can log checks to JSONL."""
        with TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "checks.jsonl"
            logger = CheckLogger(log_file=log_file)
            await logger.log_check(InvariantCheck.create("poles", CheckCategory.SURFACE, True, "ok", "check-surface"))
            await logger.flush()

            rows = [json.loads(line) for line in log_file.read_text().splitlines()]
            assert rows[0]["name"] == "poles"
            assert rows[0]["result"] == "pass"

    @pytest.mark.asyncio
    async def test_batch_flush(self):
        """Checks are batched and flushed."""
        with TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "checks.jsonl"
            logger = CheckLogger(log_file=log_file, batch_size=2)
            for i in range(3):
                await logger.log_check(InvariantCheck.create(f"c{i}", CheckCategory.FLOW, True, "ok"))
            assert len(log_file.read_text().splitlines()) == 2
            await logger.stop()
            assert len(log_file.read_text().splitlines()) == 3
            assert logger.written == 3

    @pytest.mark.asyncio
    async def test_context_manager(self):
        """Leaving the block flushes pending checks and counts failures."""
        with TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "checks.jsonl"
            async with CheckLogger(log_file=log_file) as log:
                await log.log_check(InvariantCheck.create("a", CheckCategory.FLOW, True, "ok"))
                await log.log_check(InvariantCheck.create("b", CheckCategory.FLOW, False, "off"))
                assert not log_file.exists()
            assert len(log_file.read_text().splitlines()) == 2
            assert (log.written, log.failed) == (2, 1)

    @pytest.mark.asyncio
    async def test_metrics_callback(self):
        """The flush latency is reported through the callback."""
        seen = []
        with TemporaryDirectory() as tmpdir:
            logger = CheckLogger(log_file=Path(tmpdir) / "checks.jsonl",
                                 metrics_callback=lambda name, value: seen.append(name))
            await logger.log_check(InvariantCheck.create("c", CheckCategory.FLOW, True, "ok"))
            await logger.flush()
        assert seen == ["lab.checks.flush_latency_ms"]


class TestChecksConfig:
    """Test ChecksConfig."""

    def test_create_components(self):
        """Can create components from config."""
        with TemporaryDirectory() as tmpdir:
            config = ChecksConfig(check_log_file=Path(tmpdir) / "checks.jsonl", check_log_batch_size=7)
            logger = config.create_check_logger()
            assert isinstance(logger, CheckLogger)
            assert logger.batch_size == 7
            assert config.create_suite("count").experiment == "count"
