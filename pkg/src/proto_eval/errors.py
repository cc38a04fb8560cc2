"""Exception types shared across the package."""


class ProtoEvalError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ProtoEvalError):
    """A document could not be read (malformed syntax, missing fields)."""


class ValidationError(ProtoEvalError):
    """A document parsed but violates a data invariant."""


class UndefinedMetricError(ProtoEvalError):
    """A metric has no defined value (zero denominator, empty input)."""
