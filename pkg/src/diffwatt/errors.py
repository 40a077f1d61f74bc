"""Exception types shared across the package."""


class DiffwattError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DiffwattError, ValueError):
    """An input value lies outside its documented domain."""


class UnsupportedModelError(DomainError):
    """The requested quantity is not defined for this model."""


class UnknownReferenceError(DomainError):
    """No published reference coefficients exist for this model."""


class SchemaError(DomainError):
    """A CSV header does not match the expected schema."""


class RecordError(DomainError):
    """A CSV cell violates its value domain; message names row and column."""


class DuplicateRecordError(DomainError):
    """Two records from one source share a config but disagree on energy."""


class FitError(DiffwattError):
    """Base class for regression failures."""


class InsufficientDataError(FitError):
    """Too few observations to fit, or none left after filtering."""


class RankDeficientError(FitError):
    """Design matrix is rank deficient even after dropping constant columns."""


class DegenerateDataError(DiffwattError):
    """A statistic is undefined because an input sequence has no variance."""


class ProtocolError(DiffwattError):
    """A validation protocol is malformed or cannot run on the given data."""
