"""Exception and warning types raised across the package."""


class TWMError(Exception):
    """Base class for all package errors."""


class OutOfRange(TWMError, ValueError):
    pass


class NonPositive(TWMError, ValueError):
    """State violates positivity (e.g. |Q|^2 > P(1-P))."""


class DimensionMismatch(TWMError, ValueError):
    pass


class InvalidTemperature(TWMError, ValueError):
    pass


class NegativeTime(TWMError, ValueError):
    pass


class ZeroTemperature(TWMError, ValueError):
    """A long-time limit that degenerates at f = 0."""


class ZeroProbability(TWMError, ArithmeticError):
    """Selected measurement outcome has (numerically) vanishing probability."""


class TooLarge(TWMError, ValueError):
    pass


class StepFailure(TWMError, RuntimeError):
    """Adaptive integrator could not reach the requested tolerance."""


class ValidityWarning(UserWarning):
    """Parameters lie outside the regime where the local master equation holds."""
