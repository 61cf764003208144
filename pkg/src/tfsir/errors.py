"""Exception types shared across the package.

All subclass ValueError so callers that do not care about the distinction
can catch a single base type.
"""


class TfsirError(ValueError):
    """Base class for all tfsir errors."""


class SchemaError(TfsirError):
    """Input file does not match the documented schema."""


class DataIntegrityError(TfsirError):
    """Input values are inconsistent (negative counts, varying population)."""


class DateGapError(TfsirError):
    """Date column is not a contiguous daily sequence."""


class ShapeError(TfsirError):
    """Vector lengths or sizes do not agree with what an operation needs."""


class DomainError(TfsirError):
    """A numeric argument is outside its admissible range."""


class ConfigError(TfsirError):
    """A configuration object is internally inconsistent."""


class ResumeError(TfsirError):
    """A study directory cannot be resumed from its manifest."""
