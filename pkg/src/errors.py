"""
Exception hierarchy for the solver.

Every error carries an ErrorCategory so the run loop and CLI can log it
structurally and map it to an exit code.
"""
from typing import Any, Optional

from src.observability import ErrorCategory


class NematicError(Exception):
    category: ErrorCategory = ErrorCategory.INTERNAL


class SchemeFailure(NematicError):
    """A step or potential evaluation failed; the run cannot continue (exit code 1).

    When raised out of a run, ``partial`` holds the last good state and the
    diagnostics recorded so far.
    """
    partial: Optional[Any] = None


class DomainViolation(SchemeFailure):
    """Q has eigenvalues outside the physical interval (-1/3, 2/3), or outside the part of it
    the sphere quadrature can represent, while the exact potential is active."""
    category = ErrorCategory.DOMAIN

    def __init__(self, message: str, count: int = 0, worst: float = float("nan")):
        super().__init__(message)
        self.count = count
        self.worst = worst


class NoConvergence(SchemeFailure):
    category = ErrorCategory.CONVERGENCE

    def __init__(self, message: str, failed: int = 0, max_residual: float = float("nan")):
        super().__init__(message)
        self.failed = failed
        self.max_residual = max_residual


class NonpositiveTemperature(SchemeFailure):
    category = ErrorCategory.TEMPERATURE


class TemperatureCollapse(SchemeFailure):
    """min theta <= 0 after a heat update."""
    category = ErrorCategory.TEMPERATURE


class CFLViolation(SchemeFailure):
    category = ErrorCategory.STABILITY


class IncompressibilityLoss(SchemeFailure):
    category = ErrorCategory.STABILITY


class ConfigError(NematicError):
    """Invalid or unreadable config (exit code 2)."""
    category = ErrorCategory.CONFIG

    def __init__(self, message: str, key_path: Optional[str] = None, line: Optional[int] = None):
        location = []
        if key_path:
            location.append(key_path)
        if line is not None:
            location.append(f"line {line}")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")
        self.key_path = key_path
        self.line = line


class InsufficientHistory(NematicError):
    category = ErrorCategory.VALIDATION


class NonSymmetricTensor(NematicError, ValueError):
    category = ErrorCategory.VALIDATION
