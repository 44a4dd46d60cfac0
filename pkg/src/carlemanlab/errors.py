"""Exception hierarchy shared by all modules.

Every failure mode surfaced by the library maps to one of these classes so
the CLI can translate them into stable exit codes (2 for invalid input,
3 for numerical trouble, 1 for failed certificates).
"""


class CarlemanError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(CarlemanError, ValueError):
    """A parameter violates a documented precondition."""


class InvalidSequenceError(CarlemanError, ValueError):
    """A supplied sequence is malformed (bad normalization, not monotone, ...)."""


class RangeExceededError(CarlemanError):
    """An evaluation needs quotients/breakpoints beyond the computable prefix."""


class OutOfDomainError(CarlemanError):
    """Evaluation point outside the mathematical domain of the function."""


class OutOfSectorError(CarlemanError):
    """A polar point lies outside the sector an evaluator is defined on."""


class WeightEvaluationError(CarlemanError):
    """A weight evaluator failed or was used outside its declared kind."""


class LowerBoundFailureError(CarlemanError):
    """No positive sectorial lower bound could be fitted for a weight."""


class InvalidVariantError(CarlemanError, ValueError):
    """Kernel variant incompatible with the supplied weight."""


class DivergenceDetectedError(CarlemanError):
    """An integrand was detected to be non-integrable."""


class NumericalFailureError(CarlemanError):
    """Quadrature or another numerical routine failed to converge."""


class TableExhaustedError(CarlemanError):
    """A moment table ran out of entries before a tail bound was met."""


class CertificationFailureError(CarlemanError):
    """A fitted certificate has an unbounded residual trend (genuine failure)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RecoveryFailureError(CarlemanError):
    """Coefficient recovery stopped converging at some order."""


class NotInClassError(CarlemanError):
    """A coefficient sequence admits no geometric envelope (not in any class)."""
