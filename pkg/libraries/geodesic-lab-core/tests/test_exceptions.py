"""Unit tests for the error-code hierarchy."""
from geodesic_lab_core.exceptions import (
    LabException,
    SurfaceException,
    SurfaceConstructionError,
    SectionDomainError,
    ConfigValidationError,
    TaskTimeoutError,
)


class TestExceptions:
    """Test error codes and serialization."""

    def test_codes_and_hierarchy(self):
        """Errors carry their category code and base class."""
        err = SurfaceConstructionError(invariant="neck_unique", reason="two minima")
        assert err.error_code == "SURFACE_102"
        assert isinstance(err, SurfaceException)
        assert isinstance(err, LabException)
        assert str(err).startswith("[SURFACE_102]")

    def test_to_dict(self):
        """to_dict exposes details for logs."""
        err = SectionDomainError(map_name="psi1", phi=0.4, limit=0.2)
        data = err.to_dict()
        assert data["error_code"] == "SECTION_400"
        assert data["details"]["map"] == "psi1"

    def test_config_errors_all_listed(self):
        """ConfigValidationError lists every error with its line."""
        err = ConfigValidationError([
            {"key": "bump.amplitude", "line": 4, "message": "must be a number"},
            {"key": "extra", "line": 9, "message": "unknown key"},
        ])
        assert len(err.errors) == 2
        assert "line 4" in err.message
        assert "line 9" in err.message

    def test_task_timeout(self):
        """Task timeouts keep the task name."""
        err = TaskTimeoutError(task_name="count", timeout_seconds=1.5)
        assert err.details["task_name"] == "count"
