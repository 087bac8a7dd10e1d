"""Shared numerical kernels: quadrature, root finding, differentiation.

Everything downstream (score checks, Stein expectations, information
matrices) funnels through `integrate` and `find_root`, so the conventions
live here in one place:

* Infinite endpoints are handled by a rational change of variable rather
  than truncation.  The doubly infinite line uses ``x = t / (1 - t**2)``
  mapping ``(-1, 1)`` onto the real line; semi-infinite intervals use
  ``x = a + t / (1 - t)`` on ``(0, 1)`` (mirrored for upper tails).
* Root finding is derivative-free inverse interpolation with a bisection
  safeguard (Brent), always starting from a validated sign-change bracket.
* Finite differences use central stencils with the usual cube-root /
  fourth-root step sizing in machine epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import integrate as _sci_integrate
from scipy import optimize as _sci_optimize

from .errors import (
    InvalidBracket,
    InvalidParameter,
    NonConvergence,
    NonFinite,
    NotSymmetric,
)

__all__ = [
    "QuadratureSpec",
    "Bracket",
    "integrate",
    "find_root",
    "central_diff",
    "eig_sym3",
]

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract for adaptive quadrature.

    Attributes
    ----------
    abs_tol : float
        Absolute tolerance on the integral value.
    rel_tol : float
        Relative tolerance; the effective target is
        ``max(abs_tol, rel_tol * |I|)``.
    max_subdivisions : int
        Subdivision budget before `integrate` gives up with
        `NonConvergence`.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise InvalidParameter("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise InvalidParameter("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] whose endpoint values straddle a sign change."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidBracket("bracket endpoints must be finite")
        if not self.lo < self.hi:
            raise InvalidBracket(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if not (math.isfinite(self.f_lo) and math.isfinite(self.f_hi)):
            raise InvalidBracket("bracket endpoint values must be finite")
        if self.f_lo != 0.0 and self.f_hi != 0.0 and (self.f_lo > 0.0) == (self.f_hi > 0.0):
            raise InvalidBracket(
                f"no sign change: f({self.lo}) = {self.f_lo}, f({self.hi}) = {self.f_hi}"
            )

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        return cls(lo, hi, f(lo), f(hi))


def _wrap_finite(f: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        y = f(x)
        if not math.isfinite(y):
            raise NonFinite(f"integrand evaluated to {y!r} at x = {x!r}")
        return y

    return wrapped


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over ``(a, b)`` to the accuracy demanded by ``spec``.

    Endpoints may be ``-inf`` / ``+inf``; infinite intervals are mapped to
    finite ones by the rational transforms documented in the module
    docstring, so the underlying adaptive Gauss-Kronrod rule only ever sees
    a finite domain.  The transform can push evaluation points to float
    overflow; such points are treated as the limit ``f -> 0`` (a convergent
    integral forces the transformed integrand to vanish there anyway).

    ``breakpoints`` are interior points to split the interval at, for
    integrands with kinks or removable singularities; quadrature nodes are
    strictly interior to each piece, so the listed points are never
    evaluated.

    Raises
    ------
    NonConvergence
        If the subdivision budget is exhausted before the tolerance is met.
    NonFinite
        If ``f`` evaluates to NaN or +/-inf at an interior node.
    """
    if spec is None:
        spec = QuadratureSpec()
    if not a < b:
        raise InvalidParameter(f"need a < b, got a = {a}, b = {b}")

    cuts = sorted({float(p) for p in breakpoints if a < p < b})
    if cuts:
        edges = [a, *cuts, b]
        return sum(
            integrate(f, lo, hi, spec) for lo, hi in zip(edges[:-1], edges[1:])
        )

    fin = _wrap_finite(f)
    lo_inf = math.isinf(a)
    hi_inf = math.isinf(b)

    if not lo_inf and not hi_inf:
        g, lo, hi = fin, a, b
    elif lo_inf and hi_inf:

        def g(t: float) -> float:
            u = 1.0 - t * t
            if u <= 0.0:
                return 0.0
            x = t / u
            if not math.isfinite(x):
                return 0.0
            return fin(x) * (1.0 + t * t) / (u * u)

        lo, hi = -1.0, 1.0
    elif hi_inf:

        def g(t: float) -> float:
            u = 1.0 - t
            if u <= 0.0:
                return 0.0
            x = a + t / u
            if not math.isfinite(x):
                return 0.0
            return fin(x) / (u * u)

        lo, hi = 0.0, 1.0
    else:

        def g(t: float) -> float:
            u = 1.0 - t
            if u <= 0.0:
                return 0.0
            x = b - t / u
            if not math.isfinite(x):
                return 0.0
            return fin(x) / (u * u)

        lo, hi = 0.0, 1.0

    out = _sci_integrate.quad(
        g,
        lo,
        hi,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    value, abserr = out[0], out[1]
    if not math.isfinite(value):
        raise NonFinite(f"integral evaluated to {value!r}")
    if len(out) > 3:  # a warning message was attached
        message = str(out[3])
        # a divergence diagnosis invalidates the error estimate itself
        if "divergent" in message or abserr > max(spec.abs_tol, spec.rel_tol * abs(value)):
            raise NonConvergence(
                f"quadrature stalled at error estimate {abserr:.3e} "
                f"(target {max(spec.abs_tol, spec.rel_tol * abs(value)):.3e}): {message}"
            )
    return float(value)


def find_root(f: Callable[[float], float], bracket: Bracket, tol: float = 1e-12) -> float:
    """Locate the root of ``f`` inside ``bracket``.

    Inverse interpolation with a bisection safeguard; the returned point
    always lies within the bracket and satisfies ``|f(root)| <= tol`` or a
    bracket width at most ``tol``.
    """
    if tol <= 0.0:
        raise InvalidParameter("tol must be positive")
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi
    root = _sci_optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=8.9e-16)
    return float(root)


def central_diff(f: Callable[[float], float], x: float, order: int = 1) -> float:
    """Central finite difference of ``f`` at ``x`` (first or second order).

    Step size is ``max(|x|, 1) * eps**(1/3)`` for the first derivative and
    ``max(|x|, 1) * eps**(1/4)`` for the second.
    """
    if order == 1:
        h = max(abs(x), 1.0) * _EPS ** (1.0 / 3.0)
        val = (f(x + h) - f(x - h)) / (2.0 * h)
    elif order == 2:
        h = max(abs(x), 1.0) * _EPS ** 0.25
        val = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    else:
        raise InvalidParameter(f"order must be 1 or 2, got {order}")
    if not math.isfinite(val):
        raise NonFinite(f"finite difference evaluated to {val!r} at x = {x!r}")
    return float(val)


def eig_sym3(m: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigendecomposition of a symmetric 3x3 matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as columns, so ``m ~= V @ diag(w) @ V.T``.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.shape != (3, 3):
        raise InvalidParameter(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix contains non-finite entries")
    scale = float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-12 * max(scale, 1e-300):
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds 1e-12 * {scale:.3e}")
    sym = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(sym)
    return w, v
