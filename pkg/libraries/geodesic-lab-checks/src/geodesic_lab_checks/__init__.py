"""geodesic-lab-checks: invariant checks, suites and check logging."""

from .invariant import (
    CheckCategory,
    CheckResult,
    InvariantCheck,
)
from .check_logger import CheckLogger
from .suite import CheckSuite
from .config import ChecksConfig

__all__ = [
    "CheckCategory",
    "CheckResult",
    "InvariantCheck",
    "CheckLogger",
    "CheckSuite",
    "ChecksConfig",
]
