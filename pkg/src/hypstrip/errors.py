"""Exception types shared across the package.

Each solver/monitor failure class maps to a distinct CLI exit code
(see ``hypstrip.cli.EXIT_CODES``).
"""


class HypStripError(Exception):
    """Base class for all package errors."""


class DomainError(HypStripError, ValueError):
    """An argument lies outside the domain of an operation."""


class PrecisionError(HypStripError, ArithmeticError):
    """A truncated series did not converge within the allowed number of terms."""


class StructuralError(HypStripError, ValueError):
    """Operands are defined on incompatible grids or have incompatible shapes."""


class StabilityError(HypStripError):
    """A time step violates the documented stability bound."""


class BlowUpError(HypStripError, FloatingPointError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class ConstraintDriftError(HypStripError):
    """The compatibility / divergence constraint drifted above tolerance."""

    def __init__(self, message, residual, mode=None):
        super().__init__(message)
        self.residual = residual
        self.mode = mode


class PressureCompatibilityError(HypStripError):
    """Neumann data of the pressure problem is incompatible at the zero mode."""


class ConfigError(HypStripError, ValueError):
    """Invalid run configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
