"""Exception types shared across the package.

Errors split into two broad groups: validation failures (bad inputs,
violated preconditions) and numerical failures (quadrature that will not
converge, non-finite evaluations).  The CLI maps the former to exit code 1
and the latter to exit code 2.
"""

from __future__ import annotations

__all__ = [
    "ScorekitError",
    "ValidationError",
    "NumericalError",
    "NonConvergence",
    "NonFinite",
    "InvalidBracket",
    "NotSymmetric",
    "UnknownFamily",
    "InvalidParameter",
    "OutOfSupport",
    "NonDifferentiablePoint",
    "NotIntegrable",
    "NormalizationFailure",
    "EmptySample",
    "HeavyTail",
    "NotStrictlyLogConcave",
    "NotLogConcave",
    "NoCrossing",
    "NotMonotone",
    "ParityViolation",
    "DegenerateBase",
    "SpecFileError",
]


class ScorekitError(Exception):
    """Base class for all package errors."""


class ValidationError(ScorekitError):
    """Bad input or violated precondition."""


class NumericalError(ScorekitError):
    """A numerical routine failed to deliver the requested accuracy."""


# -- numerics ---------------------------------------------------------------

class NonConvergence(NumericalError):
    """Subdivision or iteration budget exhausted before reaching tolerance."""


class NonFinite(NumericalError):
    """A function evaluated to NaN or +/-inf where a finite value is required."""


class InvalidBracket(ValidationError):
    """Root bracket endpoints do not straddle a sign change."""


class NotSymmetric(ValidationError):
    """Matrix is not symmetric within tolerance."""


# -- densities --------------------------------------------------------------

class UnknownFamily(ValidationError):
    """Density family name not recognised."""


class InvalidParameter(ValidationError):
    """Parameter outside its admissible range."""


class OutOfSupport(ValidationError):
    """Evaluation point lies outside the (open) support interval."""


class NonDifferentiablePoint(ValidationError):
    """Score requested at a registered non-differentiability point."""


class NotIntegrable(ValidationError):
    """Requested density cannot be normalised."""


class NormalizationFailure(NumericalError):
    """Normalising constant could not be computed to tolerance."""


# -- samples ----------------------------------------------------------------

class EmptySample(ValidationError):
    """No usable observations after support filtering."""


# -- variance bounds --------------------------------------------------------

class HeavyTail(NumericalError):
    """Tail integrals diverge; the bound is not defined for this density."""


class NotStrictlyLogConcave(ValidationError):
    """Derivative of the negative score is not strictly positive."""


# -- maximum likelihood -----------------------------------------------------

class NotLogConcave(ValidationError):
    """Score is not non-increasing, so the score equation may not be well posed."""


class NoCrossing(ValidationError):
    """Score sum never changes sign; the score equation has no root."""


class NotMonotone(ValidationError):
    """Reference score is not monotone on the comparison grid."""


# -- skew-symmetric models --------------------------------------------------

class ParityViolation(ValidationError):
    """Declared even/odd symmetry does not hold, or parity constraint broken."""


class DegenerateBase(ValidationError):
    """Information matrix degenerates entirely; base scores vanish."""


# -- spec files -------------------------------------------------------------

class SpecFileError(ValidationError):
    """Density/model specification file is malformed."""
