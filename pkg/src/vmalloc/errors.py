"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class EvaluationError(ArithmeticError):
    """A quantity cannot be evaluated at the requested point."""


class SolverError(RuntimeError):
    """A numerical solve produced non-finite values or could not bracket a root."""


class ConfigurationError(ValueError):
    """Inconsistent or out-of-range configuration."""


class TableFormatError(ValueError):
    """A policy table file is malformed. ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class TableValidationError(ValueError):
    """A policy table parsed correctly but its curves break the ordering in N."""


class ConvergenceWarning(RuntimeWarning):
    """Fixed-point iteration stopped at the iteration cap."""


class CapacityClampWarning(RuntimeWarning):
    """A capacity loss exceeded the available inventory and was clamped."""
