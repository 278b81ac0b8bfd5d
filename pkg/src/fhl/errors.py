"""Exception types shared across the package.

Validation errors (bad user input, bad config) derive from ValidationError;
numerical failures (quadrature, extrapolation, iteration) derive from
NumericalError.  The CLI maps the former to exit code 1 and the latter to 2.
"""


class FHLError(Exception):
    """Base class for all package errors."""


class ValidationError(FHLError):
    """Bad input: parameters, grids, or configuration."""


class NumericalError(FHLError):
    """A numerical procedure failed to reach its advertised accuracy."""


# --- validation ---------------------------------------------------------

class OutOfRange(ValidationError):
    """A parameter violates one of the model inequalities."""


class NonPositiveArgument(ValidationError):
    pass


class UnsupportedKind(ValidationError):
    pass


class EvaluationAtOrigin(ValidationError):
    pass


class DegenerateScale(ValidationError):
    pass


class EmptyWindow(ValidationError):
    pass


class KernelNotIntegrable(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class UnderResolved(ValidationError):
    pass


class DiagonalEvaluation(ValidationError):
    pass


class ResonantEps(ValidationError):
    pass


class ZeroField(ValidationError):
    pass


class MissingRobin(ValidationError):
    pass


class SampleTooClose(ValidationError):
    pass


class EmptyInterior(ValidationError):
    pass


class DegenerateStrip(ValidationError):
    pass


class NoCriticalPoint(ValidationError):
    pass


# --- numerical ----------------------------------------------------------

class DivergentIntegral(NumericalError):
    pass


class DivergentTail(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    """Raised with the achieved error estimate in the message."""


class ExtrapolationDiverged(NumericalError):
    pass


class NoConvergence(NumericalError):
    """Iteration hit max_iter.  Carries the best iterate where applicable."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class PositivityLost(NumericalError):
    pass


# --- configuration ------------------------------------------------------

class ConfigError(ValidationError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass


class WrongType(ConfigError):
    """A config value could not be coerced to its declared type."""
