"""Exception types raised across the package."""


class CritPairsError(Exception):
    """Base class for all package errors."""


class DomainError(CritPairsError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(CritPairsError, ZeroDivisionError):
    """Evaluation point coincides with a root."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateInputError(CritPairsError, ValueError):
    """Input has repeated roots (or an evaluation point hits several roots)."""


class SolverFailure(CritPairsError, RuntimeError):
    """The critical-point iteration did not reach the requested accuracy."""

    def __init__(self, message, worst_residual=float("nan"), iterations=0):
        super().__init__(message)
        self.worst_residual = worst_residual
        self.iterations = iterations


class SizeError(CritPairsError, ValueError):
    """Problem size exceeds what the routine supports."""


class CertificateRefused(CritPairsError, ValueError):
    """The Lipschitz bound used by the pairing certificate is not valid."""


class UnsupportedMeasureError(CritPairsError, ValueError):
    """The measure does not support the requested quantity."""


class WrongRegimeError(CritPairsError, ValueError):
    """The quantity is defined only for another sign of alpha."""


class InsufficientDataError(CritPairsError, ValueError):
    """Too few samples for a meaningful statistic."""


class ConfigError(CritPairsError, ValueError):
    """Invalid experiment configuration."""


class UnsupportedRegimeWarning(UserWarning):
    """Alpha lies outside the range covered by the limit theorems."""
