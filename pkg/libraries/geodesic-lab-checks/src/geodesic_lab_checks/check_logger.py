"""Batched JSONL logging of invariant checks.

Each check becomes one line of ``checks.jsonl`` and one ``logging`` record
with ``extra={"log_type": "invariant_check", ...}`` so that log shippers can
index results without parsing the message.
"""
from __future__ import annotations

import asyncio
import json
import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

from geodesic_lab_core.naming import get_metric_standardizer
from geodesic_lab_core.observability import get_run_id

from .invariant import InvariantCheck

logger = logging.getLogger(__name__)


def _log_fields(check: InvariantCheck, row: Dict[str, Any], run_id: Optional[str]) -> Dict[str, Any]:
    fields: Dict[str, Any] = {
        "log_type": "invariant_check",
        "check": check.name,
        "result": row["result"],
        "category": row["category"],
        "experiment": check.experiment,
        "measured": row["measured"],
        "bound": row["bound"],
        "run_id": run_id,
    }
    fields.update({f"context_{k}": v for k, v in check.context.items()})
    return fields


class CheckLogger:
    """Appends checks to a JSONL file in batches of ``batch_size``.

    Usable as ``async with CheckLogger(path) as log:``; leaving the block
    flushes whatever is still batched.
    """

    def __init__(
        self,
        log_file: Optional[Path] = None,
        batch_size: int = 100,
        metrics_callback: Optional[Callable[[str, float], None]] = None,
    ):
        self.log_file = Path(log_file) if log_file is not None else None
        self.batch_size = max(1, batch_size)
        self.batch: List[InvariantCheck] = []
        self.written = 0
        self.failed = 0
        self._lock = asyncio.Lock()
        self._metrics_callback = metrics_callback

    async def __aenter__(self) -> "CheckLogger":
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb) -> None:
        await self.stop()

    async def log_check(self, check: InvariantCheck) -> None:
        async with self._lock:
            self.batch.append(check)
            full = len(self.batch) >= self.batch_size
        if full:
            await self.flush()

    async def log_checks(self, checks: Iterable[InvariantCheck]) -> None:
        for check in checks:
            await self.log_check(check)

    async def stop(self) -> None:
        await self.flush()

    async def flush(self) -> None:
        async with self._lock:
            pending, self.batch = self.batch, []
        if not pending:
            return
        start = time.perf_counter()
        try:
            await asyncio.get_running_loop().run_in_executor(None, self._write, pending, get_run_id())
        except OSError as e:
            logger.error(f"could not write {len(pending)} checks to {self.log_file}: {e}")
            return
        self.written += len(pending)
        self.failed += sum(1 for c in pending if not c.passed)
        if self._metrics_callback is not None:
            self._metrics_callback(get_metric_standardizer().check_log_flush_latency_ms(),
                                   (time.perf_counter() - start) * 1000)

    def _write(self, checks: List[InvariantCheck], run_id: Optional[str]) -> None:
        lines = []
        for check in checks:
            row = check.to_dict()
            lines.append(json.dumps(row, default=str, sort_keys=True))
            level = logging.INFO if check.passed else logging.WARNING
            logger.log(level, f"[CHECK] {check.check_id}: {row['result']} ({check.reason})",
                       extra=_log_fields(check, row, run_id))
        if self.log_file is None:
            return
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_file, "a", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
