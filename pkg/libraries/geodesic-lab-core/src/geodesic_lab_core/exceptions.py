"""Exception hierarchy with error codes for structured error handling.

Every failure raised by the lab carries a stable error code so that experiment
summaries, task outcomes and logs can be grepped and aggregated.

Error Code Format: {CATEGORY}_{NUMBER}
- SURFACE_XXX: Surface construction and evaluation errors (100-199)
- FLOW_XXX: Geodesic/Jacobi/Riccati integration errors (200-299)
- COUNT_XXX: Counting and growth-rate errors (300-399)
- SECTION_XXX: Section map errors (400-499)
- HOMOCLINIC_XXX: Separatrix and splitting errors (500-599)
- CONFIG_XXX: Experiment configuration errors (600-699)
- TASK_XXX: Task execution errors (700-799)
"""
from __future__ import annotations

from typing import Any, Dict, List, Optional


class LabException(Exception):
    """Base exception for all lab errors.

    All exceptions in this hierarchy include:
    - error_code: Structured error code (e.g., "SURFACE_100")
    - user_message: Short message suitable for a CLI
    - details: Additional context for debugging
    """

    def __init__(
        self,
        error_code: str,
        message: str,
        user_message: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.error_code = error_code
        self.message = message
        self.user_message = user_message or message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for logging/serialization."""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "user_message": self.user_message,
            "details": self.details,
        }

    def __str__(self) -> str:
        return f"[{self.error_code}] {self.message}"


# ============================================================================
# Surface Errors (SURFACE_100 - SURFACE_199)
# ============================================================================

class SurfaceException(LabException):
    """Base class for surface errors."""
    pass


class DomainError(SurfaceException):
    """Arc-length outside the profile domain."""

    def __init__(self, l: float, length: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="SURFACE_100",
            message=f"arc-length l={l!r} outside [0, {length!r}]",
            user_message="Query outside the surface profile.",
            details={"l": l, "length": length, **(details or {})},
        )


class ChartError(SurfaceException):
    """State not representable in the (theta, l, phi) chart."""

    def __init__(self, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="SURFACE_101",
            message=f"chart error: {reason}",
            user_message="State lies at a pole of the chart.",
            details={"reason": reason, **(details or {})},
        )


class SurfaceConstructionError(SurfaceException):
    """A profile invariant failed while building a surface."""

    def __init__(self, invariant: str, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="SURFACE_102",
            message=f"surface invariant '{invariant}' violated: {reason}",
            user_message=f"Surface parameters violate '{invariant}'.",
            details={"invariant": invariant, "reason": reason, **(details or {})},
        )


class BumpConfigurationError(SurfaceException):
    """Perturbation bump makes the metric degenerate or leaves the flat band."""

    def __init__(self, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="SURFACE_103",
            message=f"bump configuration error: {reason}",
            user_message="Bump parameters are invalid.",
            details={"reason": reason, **(details or {})},
        )


# ============================================================================
# Flow Errors (FLOW_200 - FLOW_299)
# ============================================================================

class FlowException(LabException):
    """Base class for integration errors."""
    pass


class IntegrationError(FlowException):
    """The adaptive integrator failed (step-size collapse)."""

    def __init__(self, time: float, location: Dict[str, float], reason: str,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="FLOW_200",
            message=f"integration failed at s={time:.6g} ({location}): {reason}",
            user_message="Geodesic integration failed.",
            details={"time": time, "location": location, "reason": reason, **(details or {})},
        )


class EscapeError(FlowException):
    """No section crossing within the time cap."""

    def __init__(self, target: str, time_cap: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="FLOW_201",
            message=f"no crossing of {target} within time cap {time_cap:.6g}",
            user_message="Geodesic did not leave the region in time.",
            details={"target": target, "time_cap": time_cap, **(details or {})},
        )


# ============================================================================
# Counting Errors (COUNT_300 - COUNT_399)
# ============================================================================

class CountingException(LabException):
    """Base class for counting errors."""
    pass


class GrowthSeriesError(CountingException):
    """Growth series cannot be fitted."""

    def __init__(self, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="COUNT_300",
            message=f"growth series error: {reason}",
            user_message="Cannot fit a growth rate to this series.",
            details={"reason": reason, **(details or {})},
        )


class RefinementBudgetError(CountingException):
    """Adaptive refinement exceeded its sample budget."""

    def __init__(self, budget: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="COUNT_301",
            message=f"refinement budget of {budget} samples exceeded",
            user_message="Front refinement budget exceeded.",
            details={"budget": budget, **(details or {})},
        )


# ============================================================================
# Section Errors (SECTION_400 - SECTION_499)
# ============================================================================

class SectionException(LabException):
    """Base class for section map errors."""
    pass


class SectionDomainError(SectionException):
    """Point outside the domain of a section map."""

    def __init__(self, map_name: str, phi: float, limit: float,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="SECTION_400",
            message=f"{map_name}: |phi|={abs(phi):.6g} outside domain |phi| < {limit:.6g}",
            user_message="Section point outside the map domain.",
            details={"map": map_name, "phi": phi, "limit": limit, **(details or {})},
        )


# ============================================================================
# Homoclinic Errors (HOMOCLINIC_500 - HOMOCLINIC_599)
# ============================================================================

class HomoclinicException(LabException):
    """Base class for separatrix and splitting errors."""
    pass


class SeparatrixError(HomoclinicException):
    """No separatrix direction, or the trace drifted off the separatrix."""

    def __init__(self, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="HOMOCLINIC_500",
            message=f"separatrix error: {reason}",
            user_message="Separatrix could not be traced.",
            details={"reason": reason, **(details or {})},
        )


class BumpPlacementError(HomoclinicException):
    """No anchor on the separatrix keeps the bump support simple."""

    def __init__(self, clearance: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="HOMOCLINIC_501",
            message=f"bump support meets the separatrix twice (best clearance {clearance:.3g})",
            user_message="Bump cannot be placed on a simple separatrix point.",
            details={"clearance": clearance, **(details or {})},
        )


# ============================================================================
# Configuration Errors (CONFIG_600 - CONFIG_699)
# ============================================================================

class ConfigException(LabException):
    """Base class for configuration errors."""
    pass


class ConfigValidationError(ConfigException):
    """Experiment configuration failed validation.

    Carries every error found, not just the first one.
    """

    def __init__(self, errors: List[Dict[str, Any]], details: Optional[Dict[str, Any]] = None):
        self.errors = errors
        lines = "; ".join(
            f"{e.get('key') or '<root>'}"
            + (f" (line {e['line']})" if e.get("line") is not None else "")
            + f": {e['message']}"
            for e in errors
        )
        super().__init__(
            error_code="CONFIG_600",
            message=f"{len(errors)} configuration error(s): {lines}",
            user_message="Configuration is invalid.",
            details={"errors": errors, **(details or {})},
        )


# ============================================================================
# Task Errors (TASK_700 - TASK_799)
# ============================================================================

class TaskException(LabException):
    """Base class for experiment task errors."""
    pass


class TaskExecutionError(TaskException):
    """Experiment task failed."""

    def __init__(self, task_name: str, reason: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="TASK_700",
            message=f"Task {task_name} failed: {reason}",
            user_message="Experiment task failed.",
            details={"task_name": task_name, "reason": reason, **(details or {})},
        )


class TaskTimeoutError(TaskException):
    """Experiment task timed out."""

    def __init__(self, task_name: str, timeout_seconds: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            error_code="TASK_701",
            message=f"Task {task_name} timed out after {timeout_seconds}s",
            user_message="Experiment task took too long.",
            details={"task_name": task_name, "timeout_seconds": timeout_seconds, **(details or {})},
        )


__all__ = [
    # Base
    "LabException",
    # Surface
    "SurfaceException",
    "DomainError",
    "ChartError",
    "SurfaceConstructionError",
    "BumpConfigurationError",
    # Flow
    "FlowException",
    "IntegrationError",
    "EscapeError",
    # Counting
    "CountingException",
    "GrowthSeriesError",
    "RefinementBudgetError",
    # Sections
    "SectionException",
    "SectionDomainError",
    # Homoclinic
    "HomoclinicException",
    "SeparatrixError",
    "BumpPlacementError",
    # Config
    "ConfigException",
    "ConfigValidationError",
    # Task
    "TaskException",
    "TaskExecutionError",
    "TaskTimeoutError",
]
