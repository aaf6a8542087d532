"""
Exception hierarchy for vtruncem

Validators report violations as data (ValidationReport); the exceptions
below are raised only when an operation cannot produce a result.
"""

from typing import Any, Optional

import numpy as np


class VTruncError(Exception):
    """Base class for every error raised by vtruncem"""


class NumericFailure(VTruncError):
    """A non-finite value appeared where the mathematics guarantees a finite one"""

    def __init__(self, message: str, state: Optional[Any] = None):
        self.state = None if state is None else np.array(state, dtype=float)
        if self.state is not None:
            message = f"{message} (state={self.state.tolist()})"
        super().__init__(message)


class DegenerateInput(VTruncError):
    """Input lies where a formula is undefined, e.g. V(x)=0 under a V-power class"""


class DomainError(VTruncError, ValueError):
    """Argument outside the domain of the operation"""


class PolicyViolation(VTruncError):
    """A truncation policy constraint does not hold"""


class ConfigError(VTruncError):
    """Invalid or inconsistent configuration"""


class ValidationError(VTruncError):
    """A model failed one of its hypothesis checks"""

    def __init__(self, report: Any):
        self.report = report
        summary = report.summary() if hasattr(report, "summary") else str(report)
        super().__init__(summary)
