"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, solver failures with 3, verification failures with 4.
"""

from __future__ import annotations


class LevymartError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LevymartError):
    """Model or divergence description is malformed or unsupported."""


class SolverError(LevymartError):
    """A numerical solver failed to produce an admissible solution."""


class YDomainError(SolverError):
    """The argument of (f')^{-1} left the range of f'.

    Carries the offending points so callers can report where on the jump
    support positivity of the candidate density failed.
    """

    def __init__(self, message: str, points=None):
        super().__init__(message)
        self.points = points


class WealthDomainError(SolverError):
    """Initial capital lies outside the attainable wealth range of u."""


class DivergentMomentError(LevymartError):
    """An exponential moment or Levy-measure integral diverges."""


class QuadratureError(LevymartError):
    """Adaptive quadrature could not reach the requested tolerance."""


class VerificationError(LevymartError):
    """A verification-suite assertion failed."""
