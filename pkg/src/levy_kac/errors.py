"""Semantic exception hierarchy for the levy_kac package.

Every failure mode that a caller can meaningfully react to gets its own
class; bare ``ValueError``/``RuntimeError`` never escape the public API.
"""
from __future__ import annotations


class LevyKacError(Exception):
    """Base class for all package-specific failures."""


class InputValidationError(LevyKacError, ValueError):
    """A precondition on user-supplied arguments was violated."""


class UnknownModelError(InputValidationError):
    """A model name not present in the registry was requested."""


class InvalidStableParameterError(InputValidationError):
    """Stable-law parameters outside sigma > 0, alpha in (1,2), |beta| <= 1."""


class QuadratureError(LevyKacError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the achieved residual estimate in ``residual`` when available.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class TailFitError(LevyKacError):
    """The truncated-moment curve is not regularly varying in the window."""


class DegenerateTailError(LevyKacError):
    """Both tail probabilities vanish; skew fractions are undefined."""


class InfiniteRelativeEntropyError(LevyKacError):
    """The base density vanishes — exactly or below double-precision range —
    where the compared law carries mass, so the log-ratio integral diverges
    or cannot be certified."""


class CertificationError(LevyKacError):
    """A numeric certificate (cutoff, gap, envelope) could not be established.

    Carries the measured bound in ``bound`` when available.
    """

    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound
