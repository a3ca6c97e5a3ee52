"""geodesic-lab-core: error codes, metrics, traces and task execution for the lab."""

from .observability import (
    RunContext,
    generate_run_id,
    get_run_id,
    set_run_id,
    MetricsCollector,
    ErrorTracker,
    Tracer,
    TraceContext,
    ObservabilityConfig,
    get_global_metrics,
    set_global_metrics,
    get_global_tracer,
    set_global_tracer,
)

from .naming import (
    MetricNameStandardizer,
    get_metric_standardizer,
    set_metric_standardizer,
)

from .decorators import observed

from .executor import (
    Task,
    TaskOutcome,
    execute_task_with_timeout,
    execute_task_sync,
    run_tasks_async,
    run_tasks,
)

from .exceptions import (
    LabException,
    SurfaceException,
    DomainError,
    ChartError,
    SurfaceConstructionError,
    BumpConfigurationError,
    FlowException,
    IntegrationError,
    EscapeError,
    CountingException,
    GrowthSeriesError,
    RefinementBudgetError,
    SectionException,
    SectionDomainError,
    HomoclinicException,
    SeparatrixError,
    BumpPlacementError,
    ConfigException,
    ConfigValidationError,
    TaskException,
    TaskExecutionError,
    TaskTimeoutError,
)

__all__ = [
    # Observability
    "RunContext",
    "generate_run_id",
    "get_run_id",
    "set_run_id",
    "MetricsCollector",
    "ErrorTracker",
    "Tracer",
    "TraceContext",
    "ObservabilityConfig",
    "get_global_metrics",
    "set_global_metrics",
    "get_global_tracer",
    "set_global_tracer",
    # Naming
    "MetricNameStandardizer",
    "get_metric_standardizer",
    "set_metric_standardizer",
    "observed",
    # Execution
    "Task",
    "TaskOutcome",
    "execute_task_with_timeout",
    "execute_task_sync",
    "run_tasks_async",
    "run_tasks",
    # Exceptions
    "LabException",
    "SurfaceException",
    "DomainError",
    "ChartError",
    "SurfaceConstructionError",
    "BumpConfigurationError",
    "FlowException",
    "IntegrationError",
    "EscapeError",
    "CountingException",
    "GrowthSeriesError",
    "RefinementBudgetError",
    "SectionException",
    "SectionDomainError",
    "HomoclinicException",
    "SeparatrixError",
    "BumpPlacementError",
    "ConfigException",
    "ConfigValidationError",
    "TaskException",
    "TaskExecutionError",
    "TaskTimeoutError",
]
