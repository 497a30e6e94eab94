"""Exception types shared across the package."""


class DickeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DickeError, ValueError):
    """A model parameter or argument is outside its admissible range."""


class InvalidDistributionError(DickeError, ValueError):
    """A probability vector is unnormalized or negative."""


class DomainError(DickeError, ValueError):
    """An analytic expression was evaluated outside its domain of validity."""


class NumericalError(DickeError, RuntimeError):
    """A numerical routine failed to reach its tolerance.

    Carries diagnostic context (achieved tolerance, final bracket, ...)
    in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class BracketError(NumericalError):
    """Root bracket does not enclose a sign change."""


class CutoffError(DickeError, RuntimeError):
    """A Fock-space truncation is too small for the requested computation."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class CapacityError(DickeError, ValueError):
    """A requested basis exceeds the supported dimension bounds."""


class InsufficientDataError(DickeError, ValueError):
    """Too few data points for the requested fit."""


class InternalConsistencyError(DickeError, RuntimeError):
    """Two independent evaluation paths disagree beyond tolerance."""


class ConfigError(DickeError, ValueError):
    """A sweep configuration file or override is invalid."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line
