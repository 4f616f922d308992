"""Exception types shared across the package."""


class SpanAlignError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SpanAlignError):
    """Malformed input: bad file contents, out-of-range indices, bad config."""


class FormatError(ValidationError):
    """A file does not conform to its declared serialization format."""


class NumericError(SpanAlignError):
    """A numeric invariant was violated (non-finite loss, NaN score, ...)."""
