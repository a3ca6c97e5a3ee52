"""Run one experiment end to end into its own output directory."""
from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from geodesic_lab_checks import CheckCategory, ChecksConfig, CheckSuite
from geodesic_lab_core.observability import ObservabilityConfig, RunContext

from .artifacts import ArtifactWriter, library_versions
from .config import ExperimentConfig
from .runners import ExperimentContext, experiment_runners

logger = logging.getLogger(__name__)

_CATEGORY = {
    "check-surface": CheckCategory.SURFACE,
    "trace": CheckCategory.FLOW,
    "count": CheckCategory.COUNTING,
    "integral": CheckCategory.COUNTING,
    "front": CheckCategory.COUNTING,
    "returnmap": CheckCategory.SECTIONS,
    "circle": CheckCategory.SECTIONS,
    "lyapunov": CheckCategory.LYAPUNOV,
    "splitting": CheckCategory.HOMOCLINIC,
    "headline": CheckCategory.GROWTH,
}


@dataclass
class RunResult:
    """Where a run wrote its files, and whether every check passed."""

    out_dir: Path
    summary: Dict[str, Any]

    @property
    def passed(self) -> bool:
        return bool(self.summary["passed"])


async def _log_checks(checks_config: ChecksConfig, suite: CheckSuite, metrics) -> None:
    async with checks_config.create_check_logger(metrics_callback=metrics.record_histogram) as check_logger:
        await check_logger.log_checks(suite.checks)


def run_experiment(config: ExperimentConfig, out_dir: Optional[Path] = None) -> RunResult:
    """Run ``config`` and write its artifact bundle.

    The bundle holds the experiment's CSV tables, ``checks.jsonl``,
    ``summary.json`` (deterministic for a fixed seed), ``metrics.json`` and a
    ``manifest.json`` with file hashes. A runner that raises is recorded as an
    error check; the summary is written either way.
    """
    out_dir = Path(out_dir) if out_dir is not None else config.output_dir
    observability = ObservabilityConfig()
    metrics = observability.create_metrics_collector()
    error_tracker = observability.create_error_tracker()
    tracer = observability.create_tracer()
    writer = ArtifactWriter(out_dir)
    writer.prepare()
    checks_config = ChecksConfig(check_log_file=writer.check_log)
    suite = checks_config.create_suite(config.experiment, metrics_collector=metrics)
    ctx = ExperimentContext(config, suite, writer, metrics, error_tracker)

    with RunContext(metrics=metrics, tracer=tracer) as run:
        logger.info(f"run {run.run_id}: {config.experiment} -> {out_dir} (config {config.config_hash[:12]})")
        try:
            experiment_runners()[config.experiment](ctx)
        except Exception as e:
            error_tracker.record_error(e, task_name=config.experiment)
            suite.error(config.experiment, _CATEGORY[config.experiment], e)
        if not suite.checks:
            suite.record("no_checks", _CATEGORY[config.experiment], False, "experiment exercised no invariant")

        asyncio.run(_log_checks(checks_config, suite, metrics))

        checks = suite.summary()
        summary = {
            "experiment": config.experiment,
            "config": config.to_dict(),
            "config_hash": config.config_hash,
            "versions": library_versions(),
            "seed": config.seed,
            "passed": suite.passed,
            "counts": checks["counts"],
            "checks": suite.to_rows(),
            "tasks": ctx.tasks,
            "results": ctx.results,
            "files": sorted(writer.files),
        }
        writer.write_json("summary.json", summary)
        writer.write_json("metrics.json", {"metrics": metrics.get_all_metrics(),
                                           "operations": tracer.summary(),
                                           "errors": error_tracker.get_error_summary()})
        writer.write_manifest(run.run_id)

    level = logging.INFO if suite.passed else logging.WARNING
    logger.log(level, f"{config.experiment}: {checks['counts']} -> {'PASS' if suite.passed else 'FAIL'}")
    return RunResult(out_dir, summary)


__all__ = ["RunResult", "run_experiment"]
