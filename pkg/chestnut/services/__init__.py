from .pipeline import assign_invocations, run
from .stats import StatisticsService, emit_stats
from .validation import DatasetValidator, ValidationResult, validate_output

__all__ = [
    "DatasetValidator",
    "StatisticsService",
    "ValidationResult",
    "assign_invocations",
    "emit_stats",
    "run",
    "validate_output",
]
