"""Unit tests for run artifacts."""
import csv
import json
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from geodesic_lab_experiments.artifacts import (
    ArtifactWriter,
    canonical_json,
    clean,
    file_sha256,
    library_versions,
    stable_hash,
)


class TestClean:
    """Test conversion to plain JSON values."""

    def test_numpy_values(self):
        """Arrays and scalars become lists and Python numbers."""
        data = clean({"a": np.arange(3), "b": np.float64(0.5), 1: (np.int64(2),)})
        assert data == {"a": [0, 1, 2], "b": 0.5, "1": [2]}
        assert type(data["b"]) is float

    def test_non_finite(self):
        """NaN and infinities become None."""
        assert clean([float("nan"), np.inf, 1.0]) == [None, None, 1.0]

    def test_canonical_json(self):
        """Key order does not change the text or the hash."""
        assert canonical_json({"b": 1, "a": [1.5]}) == '{"a":[1.5],"b":1}'
        assert stable_hash({"b": 1, "a": 2}) == stable_hash({"a": 2, "b": 1})
        assert stable_hash({"a": 1}) != stable_hash({"a": 1.5})

    def test_versions(self):
        """Every distribution gets a version string."""
        versions = library_versions()
        assert "numpy" in versions
        assert all(isinstance(v, str) for v in versions.values())


class TestArtifactWriter:
    """Test ArtifactWriter."""

    def test_csv(self):
        """Rows are written with exact floats and empty cells for missing values."""
        with TemporaryDirectory() as tmpdir:
            writer = ArtifactWriter(Path(tmpdir) / "run")
            writer.prepare()
            path = writer.write_csv("t.csv", [{"x": 0.1, "y": None}, {"x": 1, "y": [1, 2]}])
            with open(path, newline="") as f:
                rows = list(csv.reader(f))
            assert rows == [["x", "y"], ["0.1", ""], ["1", "[1, 2]"]]

    def test_columns(self):
        """Column tables are written row by row."""
        with TemporaryDirectory() as tmpdir:
            writer = ArtifactWriter(Path(tmpdir))
            writer.prepare()
            path = writer.write_columns("c.csv", {"t": np.array([0.0, 1.0]), "v": [2.0, 3.0]})
            lines = path.read_text().splitlines()
            assert lines == ["t,v", "0.0,2.0", "1.0,3.0"]

    def test_manifest(self):
        """The manifest hashes every written file."""
        with TemporaryDirectory() as tmpdir:
            writer = ArtifactWriter(Path(tmpdir))
            writer.prepare()
            summary = writer.write_json("summary.json", {"value": float("inf")})
            assert json.loads(summary.read_text()) == {"value": None}
            manifest = json.loads(writer.write_manifest("run-1").read_text())
            assert manifest["run_id"] == "run-1"
            assert manifest["files"]["summary.json"]["sha256"] == file_sha256(summary)
            assert writer.files == ["summary.json"]

    def test_prepare_drops_stale_log(self):
        """A check log from an earlier run is removed."""
        with TemporaryDirectory() as tmpdir:
            writer = ArtifactWriter(Path(tmpdir))
            writer.check_log.write_text("{}\n")
            writer.prepare()
            assert not writer.check_log.exists()
