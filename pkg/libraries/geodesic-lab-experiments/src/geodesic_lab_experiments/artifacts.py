"""Result files of an experiment run: CSV tables, JSON summaries and a manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LAB_DISTRIBUTIONS = (
    "geodesic-lab-core",
    "geodesic-lab-geometry",
    "geodesic-lab-dynamics",
    "geodesic-lab-checks",
    "geodesic-lab-experiments",
    "numpy",
    "scipy",
    "pyyaml",
)


def clean(value: Any) -> Any:
    """Convert numpy values to plain Python; non-finite floats become None."""
    if isinstance(value, Mapping):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(value: Any) -> str:
    return json.dumps(clean(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_hash(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def library_versions() -> Dict[str, str]:
    versions = {}
    for name in LAB_DISTRIBUTIONS:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _cell(value: Any) -> Any:
    value = clean(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value


class ArtifactWriter:
    """Writes the files of one run into a single output directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.files: List[str] = []

    @property
    def check_log(self) -> Path:
        return self.out_dir / "checks.jsonl"

    def prepare(self) -> None:
        """Create the directory and drop a stale check log (the logger appends)."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if self.check_log.exists():
            self.check_log.unlink()

    def _track(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.out_dir / name

    def write_csv(self, name: str, rows: Sequence[Mapping[str, Any]],
                  columns: Optional[Sequence[str]] = None) -> Path:
        """Write rows as CSV; columns default to the keys of the first row."""
        path = self._track(name)
        if columns is None:
            columns = list(rows[0].keys()) if rows else []
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])
        logger.debug(f"wrote {len(rows)} rows to {path}")
        return path

    def write_columns(self, name: str, table: Mapping[str, Iterable[Any]]) -> Path:
        """Write a dict of equal-length columns as CSV."""
        columns = list(table.keys())
        data = [np.asarray(table[c]).tolist() for c in columns]
        rows = [dict(zip(columns, values)) for values in zip(*data)]
        return self.write_csv(name, rows, columns)

    def write_json(self, name: str, data: Any) -> Path:
        path = self._track(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(clean(data), f, sort_keys=True, indent=2, ensure_ascii=False, default=str)
            f.write("\n")
        return path

    def write_manifest(self, run_id: Optional[str] = None) -> Path:
        """List every file of the run with its sha256; the run id is informational."""
        entries = {}
        for name in sorted(set(self.files) | ({self.check_log.name} if self.check_log.exists() else set())):
            path = self.out_dir / name
            if path.exists():
                entries[name] = {"sha256": file_sha256(path), "bytes": path.stat().st_size}
        path = self.out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"run_id": run_id, "files": entries}, f, sort_keys=True, indent=2)
            f.write("\n")
        return path


__all__ = [
    "clean",
    "canonical_json",
    "stable_hash",
    "file_sha256",
    "library_versions",
    "ArtifactWriter",
]
