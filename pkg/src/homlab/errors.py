"""Exception hierarchy shared across the package."""


class HomlabError(Exception):
    """Base class for all package errors."""


class FieldError(HomlabError, ArithmeticError):
    pass


class DivisionByZero(FieldError, ZeroDivisionError):
    pass


class ModulusMismatch(FieldError, ValueError):
    pass


class DimensionMismatch(HomlabError, ValueError):
    pass


class PmfError(HomlabError, ValueError):
    """Invalid probability table (negative entries, bad total mass)."""


class UnknownAxis(HomlabError, KeyError):
    pass


class OverlappingAxes(HomlabError, ValueError):
    pass


class AbsoluteContinuityViolation(HomlabError, ValueError):
    pass


class EmptySequence(HomlabError, ValueError):
    pass


class LengthMismatch(HomlabError, ValueError):
    pass


class InvalidSpec(HomlabError, ValueError):
    pass


class AlphabetMismatch(InvalidSpec):
    pass


class ZeroCoefficientVector(HomlabError, ValueError):
    pass


class UnboundedCell(HomlabError, ValueError):
    pass


class NotNaturalCombination(HomlabError, ValueError):
    pass


class MarkovPrecondFailed(HomlabError, ValueError):
    pass


class InvalidAlpha(HomlabError, ValueError):
    pass


class BudgetExceeded(HomlabError, RuntimeError):
    """An exhaustive enumeration would exceed the configured budget."""


class WrongMessageLength(DimensionMismatch):
    pass


class InstanceTooLarge(HomlabError, ValueError):
    pass


class DecodingFailure(HomlabError):
    """Decoder could not produce a unique estimate.

    ``kind`` is ``"no_candidate"`` or ``"ambiguous"``.
    """

    NO_CANDIDATE = "no_candidate"
    AMBIGUOUS = "ambiguous"

    def __init__(self, kind, message=None):
        self.kind = kind
        super().__init__(message or kind)


class UsageError(HomlabError):
    pass


class SchemaError(HomlabError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid value for {field!r}")


class IoFailure(HomlabError, OSError):
    """A report or artifact could not be written or read."""


class InvalidModulus(FieldError, ValueError):
    """Field size is not a prime."""
