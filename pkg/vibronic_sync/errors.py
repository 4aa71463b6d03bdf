"""
Exception types for vibronic-sync.

Numerical kernels raise these; the CLI maps each family to an exit code.
"""


class VibronicSyncError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ConfigError(VibronicSyncError):
    """Invalid scenario or application configuration."""

    exit_code = 1


class UnknownPresetError(ConfigError):
    pass


class NumericalError(VibronicSyncError):
    """A numerical stage failed or produced an invalid result."""

    exit_code = 2


class DimensionOverflowError(NumericalError):
    pass


class SolverFailureError(NumericalError):
    pass


class StepSizeUnderflowError(NumericalError):
    pass


class InvariantViolationError(NumericalError):
    pass


class BasisMismatchError(NumericalError):
    pass


class MemoryBudgetError(NumericalError):
    pass


class WindowTooShortError(NumericalError):
    pass


class IndexOutOfRangeError(VibronicSyncError, IndexError):
    exit_code = 2


class RegressionFailure(VibronicSyncError):
    """Reference regression (table2 --strict) did not pass."""

    exit_code = 3


class ParameterRegimeWarning(UserWarning):
    """Parameters lie outside the regime an estimate was derived for."""
