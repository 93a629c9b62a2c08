"""Python access to the urbanflow core: choice math, assignment, and the annual pipeline."""

from ._core import (
    AssignmentError,
    ChoiceError,
    ConfigError,
    Error,
    StageError,
    ValidationError,
    bpr_time,
    cdap_combination_probabilities,
    compare,
    fit_mnl,
    frank_wolfe,
    logsum,
    mnl_probabilities,
    report,
    run,
    validate,
)

__all__ = [
    "AssignmentError",
    "ChoiceError",
    "ConfigError",
    "Error",
    "StageError",
    "ValidationError",
    "bpr_time",
    "cdap_combination_probabilities",
    "compare",
    "fit_mnl",
    "frank_wolfe",
    "logsum",
    "mnl_probabilities",
    "report",
    "run",
    "validate",
]
