"""Exception types shared across the package."""


class MvecError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(MvecError):
    """A file is structurally malformed: bad magic, truncation, trailing bytes."""


class ValidationError(MvecError):
    """Parsed data violates a content invariant (shapes, ranges, finiteness)."""
