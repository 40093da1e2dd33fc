"""
Exception hierarchy shared by the physics, analysis and sweep layers
"""

from typing import Any, Dict, List, Optional


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(ToolkitError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(ToolkitError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message: str, residuals: Optional[List[float]] = None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class CalibrationError(ToolkitError):
    """Well-width calibration could not bracket or hit its target."""


class NumericalError(ToolkitError):
    """Time stepping became unstable."""

    def __init__(self, message: str, step: Optional[int] = None, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.step = step
        self.report = dict(report or {})


class FitError(ToolkitError):
    """A fit failed to converge or received unusable data."""

    def __init__(self, message: str, residuals: Optional[List[float]] = None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class DegeneracyError(FitError):
    """Fit parameters are not identifiable from the data."""


class SamplingError(ToolkitError, ValueError):
    """A sampling grid is too coarse for the requested observable."""


class ConfigError(ToolkitError):
    """Invalid run or sweep configuration."""


class OutputError(ToolkitError):
    """Reading or writing a result file failed."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f"{message} ({path})" if path else message)
        self.path = path
