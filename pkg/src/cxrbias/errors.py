"""Exception hierarchy shared by all subpackages."""

from __future__ import annotations


class CxrBiasError(Exception):
    """Base class for every error raised by this package."""


class ManifestFormatError(CxrBiasError, ValueError):
    """The manifest CSV does not have the expected layout."""


class ManifestValidationError(CxrBiasError, ValueError):
    """The manifest parses but violates an entry invariant."""


class InsufficientDataError(CxrBiasError, ValueError):
    def __init__(self, message: str, available: int, requested: int):
        super().__init__(message)
        self.available = available
        self.requested = requested


class ParameterError(CxrBiasError, ValueError):
    """An operation parameter is outside its valid domain."""


class ShapeError(CxrBiasError, ValueError):
    """Array dimensions do not agree."""


class DecodeError(CxrBiasError, OSError):
    """An image file could not be decoded."""


class MissingMaskError(CxrBiasError, FileNotFoundError):
    """No segmentation mask is available and the policy forbids passthrough."""


class CalibrationError(CxrBiasError, RuntimeError):
    """Perplexity bandwidth search failed."""


class NumericError(CxrBiasError, FloatingPointError):
    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateProblemError(CxrBiasError, ValueError):
    """The training problem has no meaningful solution (e.g. one class)."""


class TrainingError(CxrBiasError, RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class UndefinedMetricError(CxrBiasError, ValueError):
    """A metric is undefined for the given labels (e.g. a single class)."""
