"""Exception types shared across the package."""


class DkcfSimError(Exception):
    """Base class for all package errors."""


class ConfigValidationError(DkcfSimError, ValueError):
    """Raised when a config is invalid. Carries every violated field."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "invalid configuration:\n" + "\n".join(
            f"  - {v}" for v in self.violations
        )
        super().__init__(msg)


class NumericalDegeneracyError(DkcfSimError, ArithmeticError):
    """Raised when a matrix required to be invertible has collapsed."""

    def __init__(self, message, condition_number=None):
        self.condition_number = condition_number
        if condition_number is not None:
            message = f"{message} (condition number {condition_number:.3e})"
        super().__init__(message)


class DegenerateGeometryError(DkcfSimError, ValueError):
    """Raised when a geometric estimation problem is underdetermined."""


class UndefinedMetricError(DkcfSimError, ValueError):
    """Raised when a metric is requested on data where it is undefined."""
