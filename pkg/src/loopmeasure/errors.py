"""Exception and warning types shared across the package.

Every error raised on purpose derives from LoopMeasureError so callers can
catch library failures without swallowing genuine bugs.  The CLI maps the
branches of this hierarchy to distinct exit codes.
"""

from __future__ import annotations

__all__ = [
    "LoopMeasureError",
    "DomainError",
    "NumericError",
    "HorizonError",
    "InfiniteMassError",
    "GrunskyViolationError",
    "MatrixClassificationError",
    "UnsupportedPresentationError",
    "UnverifiableMarkingError",
    "FitError",
    "SpectrumFormatError",
    "SpectrumVersionError",
    "SpectrumChecksumError",
    "MalformedRecordError",
    "ConfigError",
    "AcceptanceFailure",
    "GaussBonnetWarning",
    "IterationDivisibilityWarning",
]


class LoopMeasureError(Exception):
    """Base class for all deliberate failures in this package."""


class DomainError(LoopMeasureError, ValueError):
    """An input is outside the mathematical domain of the operation."""


class NumericError(LoopMeasureError):
    """A numerical routine failed to converge to the requested tolerance.

    Carries the partial value and the best available error bound so the
    caller can decide whether the partial result is still usable.
    """

    def __init__(self, message: str, *, partial_value: float, error_bound: float):
        super().__init__(message)
        self.partial_value = partial_value
        self.error_bound = error_bound


class HorizonError(LoopMeasureError):
    """A query needs spectrum data beyond the reliable enumeration horizon."""

    def __init__(self, message: str, *, horizon: float):
        super().__init__(message)
        self.horizon = horizon


class InfiniteMassError(DomainError):
    """The requested class carries infinite loop mass (contractible loops)."""


class GrunskyViolationError(DomainError):
    """Electrical thickness came out negative beyond tolerance."""


class MatrixClassificationError(DomainError):
    """A matrix is not hyperbolic where a hyperbolic one is required."""

    def __init__(self, message: str, *, kind: str):
        super().__init__(message)
        self.kind = kind  # "parabolic" or "elliptic"


class UnsupportedPresentationError(LoopMeasureError):
    """Enumeration asked for on a presentation it cannot handle."""


class UnverifiableMarkingError(LoopMeasureError):
    """Identity requested for a homology class whose marking is not pinned."""


class FitError(LoopMeasureError):
    """Tail extrapolation preconditions (point count / span) not met."""


class SpectrumFormatError(LoopMeasureError):
    """Base class for spectrum cache persistence failures."""


class SpectrumVersionError(SpectrumFormatError):
    """Cache file version differs from the supported version."""

    def __init__(self, found: int, expected: int):
        super().__init__(f"spectrum cache version {found}, expected {expected}")
        self.found = found
        self.expected = expected


class SpectrumChecksumError(SpectrumFormatError):
    """Cache file checksum mismatch (corrupt or truncated file)."""


class MalformedRecordError(SpectrumFormatError):
    """Cache file structure cannot be decoded."""


class ConfigError(LoopMeasureError):
    """Run configuration is missing, malformed, or has unknown keys."""


class AcceptanceFailure(LoopMeasureError):
    """Self-test criterion failed."""


class GaussBonnetWarning(UserWarning):
    """Area inconsistent with 4*pi*(g-1) for every integer genus g >= 2."""


class IterationDivisibilityWarning(UserWarning):
    """A cover-side iteration number does not divide the base iteration."""
