"""Invariant check data structures."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Optional


class CheckCategory(str, Enum):
    """Area of the lab an invariant belongs to."""

    SURFACE = "surface"
    FLOW = "flow"
    COUNTING = "counting"
    SECTIONS = "sections"
    HOMOCLINIC = "homoclinic"
    LYAPUNOV = "lyapunov"
    GROWTH = "growth"


class CheckResult(str, Enum):
    """Result of an invariant check."""

    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


_RELATIONS = {
    "<=": lambda m, b, tol: m <= b + tol,
    ">=": lambda m, b, tol: m >= b - tol,
    "<": lambda m, b, tol: m < b,
    ">": lambda m, b, tol: m > b,
    "==": lambda m, b, tol: abs(m - b) <= tol,
}


def _number(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class InvariantCheck:
    """Structured record of one checked invariant.

    ``check_id`` is ``<experiment>/<name>``; no timestamps are stored so that
    records of two runs with the same seed are identical.
    """

    check_id: str
    name: str
    category: CheckCategory
    result: CheckResult
    reason: str
    experiment: str
    measured: Optional[float] = None
    bound: Optional[float] = None
    relation: Optional[str] = None
    tolerance: float = 0.0
    context: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.result == CheckResult.PASS

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        data = asdict(self)
        data["category"] = self.category.value
        data["result"] = self.result.value
        data["measured"] = _number(self.measured)
        data["bound"] = _number(self.bound)
        return data

    @classmethod
    def create(
        cls,
        name: str,
        category: CheckCategory,
        passed: bool,
        reason: str,
        experiment: str = "",
        measured: Optional[float] = None,
        bound: Optional[float] = None,
        relation: Optional[str] = None,
        tolerance: float = 0.0,
        context: Optional[Dict[str, Any]] = None,
    ) -> "InvariantCheck":
        """Create a new check record."""
        return cls(
            check_id=f"{experiment}/{name}" if experiment else name,
            name=name,
            category=category,
            result=CheckResult.PASS if passed else CheckResult.FAIL,
            reason=reason,
            experiment=experiment,
            measured=measured,
            bound=bound,
            relation=relation,
            tolerance=tolerance,
            context=dict(context or {}),
        )

    @classmethod
    def compare(
        cls,
        name: str,
        category: CheckCategory,
        measured: float,
        relation: str,
        bound: float,
        tolerance: float = 0.0,
        experiment: str = "",
        context: Optional[Dict[str, Any]] = None,
    ) -> "InvariantCheck":
        """Check ``measured <relation> bound`` with an absolute tolerance.

        NaN measurements fail.
        """
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        passed = not math.isnan(measured) and bool(_RELATIONS[relation](measured, bound, tolerance))
        reason = f"{measured:.6g} {relation} {bound:.6g}" + (f" (tol {tolerance:.1e})" if tolerance else "")
        return cls.create(name, category, passed, reason, experiment, measured, bound, relation, tolerance, context)

    @classmethod
    def errored(cls, name: str, category: CheckCategory, error: Exception, experiment: str = "") -> "InvariantCheck":
        """Record a check that could not be evaluated."""
        check = cls.create(name, category, False, f"{type(error).__name__}: {error}", experiment)
        check.result = CheckResult.ERROR
        if hasattr(error, "error_code"):
            check.context["error_code"] = error.error_code
        return check
