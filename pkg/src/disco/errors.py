"""Exception hierarchy shared by all toolkit modules."""


class DiscoError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(DiscoError):
    """Input violates a documented precondition (shape, range, finiteness)."""


class NumericalFailure(DiscoError):
    """A numerical routine (SVD, eigensolver) failed to converge."""


class InvalidGroupCount(DiscoError):
    """Requested number of spectral groups cannot partition the spectrum."""


class InvalidGroupIndex(DiscoError):
    """Group index outside [0, group_count)."""


class DegenerateSpectrum(DiscoError):
    """All singular values are zero (or below the truncation threshold)."""


class DegenerateComponent(DiscoError):
    """A spectral component has zero Frobenius norm where a ratio needs it."""


class MissingClass(DiscoError):
    """A class index in [0, C) has no samples."""


class InvalidLabels(DiscoError):
    """Label vector is malformed or has fewer than two classes."""


class InsufficientModels(DiscoError):
    """An operation over a model hub needs at least two models."""


class FormatError(DiscoError):
    """A file does not conform to its documented format.

    Carries the byte offset of the first offending byte when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class StageError(DiscoError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"error in stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
