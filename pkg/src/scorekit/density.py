"""Densities and their score functions.

The two central objects are the location score ``phi(x) = (log p)'(x)`` and
the scale score ``psi(x) = 1 + x * phi(x)``.  Built-in families carry
analytic scores; user densities fall back to central finite differences of
the log-density.  Points where the score does not exist (the Laplace kink
at its location, the origin of the constructed singular-pair densities)
are registered on the `Density` and rejected explicitly rather than
returning garbage.

Sampling follows a single convention everywhere: draw uniforms from
numpy's default bit generator and push them through the quantile function,
analytically where the inverse cdf has a closed form and by bisection on
the numeric cdf otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import special as _sp

from .errors import (
    InvalidParameter,
    NonConvergence,
    NonDifferentiablePoint,
    NonFinite,
    NotIntegrable,
    NotSymmetric,
    NormalizationFailure,
    OutOfSupport,
    UnknownFamily,
)
from .expressions import compile_expression
from .numerics import Bracket, QuadratureSpec, central_diff, find_root, integrate

__all__ = [
    "SupportInterval",
    "Density",
    "ScoreEvaluation",
    "REAL_LINE",
    "POSITIVE_HALF_LINE",
    "BUILTIN_FAMILIES",
    "make_builtin",
    "location_score",
    "scale_score",
    "score_zero_mean_check",
    "score_deriv",
    "integrate_density",
    "power_density",
    "density_from_expression",
    "pdf",
    "cdf",
    "quantile",
    "central_region",
    "evaluation_grid",
    "sample",
    "normalization_gap",
]


@dataclass(frozen=True)
class SupportInterval:
    """Open interval (a, b); either endpoint may be infinite."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise InvalidParameter(f"support needs a < b, got ({self.a}, {self.b})")

    def contains(self, x: float) -> bool:
        return self.a < x < self.b

    @property
    def is_positive_half_line(self) -> bool:
        return self.a >= 0.0


REAL_LINE = SupportInterval(-math.inf, math.inf)
POSITIVE_HALF_LINE = SupportInterval(0.0, math.inf)


@dataclass(frozen=True, eq=False)
class Density:
    """A univariate density known through its log-pdf.

    ``analytic_score`` is phi = (log p)'; when absent the score is obtained
    by central finite differences.  ``exception_points`` are interior
    points where the score does not exist; score evaluation there raises
    `NonDifferentiablePoint` and integrals split around them.
    ``analytic_score_deriv`` is phi' where cheap to provide (it sharpens
    the log-concavity checks and the sharp variance bound).
    """

    name: str
    support: SupportInterval
    log_pdf: Callable[[float], float]
    analytic_score: Optional[Callable[[float], float]] = None
    symmetric: bool = False
    params: Mapping[str, float] = field(default_factory=dict)
    exception_points: Tuple[float, ...] = ()
    analytic_score_deriv: Optional[Callable[[float], float]] = None
    _quantile: Optional[Callable[[float], float]] = None

    def __repr__(self) -> str:  # keep reprs short, params carry the detail
        return f"Density({self.name!r})"


@dataclass(frozen=True)
class ScoreEvaluation:
    """Location and scale score of a density at a point.

    ``psi`` is always exactly ``1 + x * phi``.  ``source`` records whether
    phi came from an analytic formula or a finite difference.
    """

    x: float
    phi: float
    psi: float
    source: str


# ---------------------------------------------------------------------------
# built-in families


def _normal(mu: float, sigma: float) -> Density:
    if sigma <= 0.0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    log_norm = math.log(sigma * math.sqrt(2.0 * math.pi))
    inv_var = 1.0 / (sigma * sigma)

    return Density(
        name="normal",
        support=REAL_LINE,
        log_pdf=lambda x: -0.5 * (x - mu) ** 2 * inv_var - log_norm,
        analytic_score=lambda x: -(x - mu) * inv_var,
        analytic_score_deriv=lambda x: -inv_var,
        symmetric=mu == 0.0,
        params={"mu": mu, "sigma": sigma},
        _quantile=lambda u: mu + sigma * float(_sp.ndtri(u)),
    )


def _exponential(lam: float) -> Density:
    if lam <= 0.0:
        raise InvalidParameter(f"lam must be positive, got {lam}")
    log_lam = math.log(lam)

    return Density(
        name="exponential",
        support=POSITIVE_HALF_LINE,
        log_pdf=lambda x: log_lam - lam * x,
        analytic_score=lambda x: -lam,
        analytic_score_deriv=lambda x: 0.0,
        symmetric=False,
        params={"lam": lam},
        _quantile=lambda u: -math.log1p(-u) / lam,
    )


def _laplace(mu: float, b: float) -> Density:
    if b <= 0.0:
        raise InvalidParameter(f"b must be positive, got {b}")
    log_norm = math.log(2.0 * b)

    def lq(u: float) -> float:
        return mu + b * math.log(2.0 * u) if u < 0.5 else mu - b * math.log(2.0 - 2.0 * u)

    return Density(
        name="laplace",
        support=REAL_LINE,
        log_pdf=lambda x: -abs(x - mu) / b - log_norm,
        analytic_score=lambda x: -math.copysign(1.0, x - mu) / b,
        analytic_score_deriv=lambda x: 0.0,
        symmetric=mu == 0.0,
        params={"mu": mu, "b": b},
        exception_points=(mu,),
        _quantile=lq,
    )


def _gumbel(mu: float, beta: float) -> Density:
    if beta <= 0.0:
        raise InvalidParameter(f"beta must be positive, got {beta}")
    log_beta = math.log(beta)

    def lp(x: float) -> float:
        z = (x - mu) / beta
        return -log_beta - z - math.exp(-z) if z > -700.0 else -math.inf

    return Density(
        name="gumbel",
        support=REAL_LINE,
        log_pdf=lp,
        analytic_score=lambda x: (math.exp(-(x - mu) / beta) - 1.0) / beta
        if (x - mu) / beta > -700.0
        else math.inf,
        analytic_score_deriv=lambda x: -math.exp(-(x - mu) / beta) / (beta * beta),
        symmetric=False,
        params={"mu": mu, "beta": beta},
        _quantile=lambda u: mu - beta * math.log(-math.log(u)),
    )


def _student_t(nu: float) -> Density:
    if nu <= 0.0:
        raise InvalidParameter(f"nu must be positive, got {nu}")
    log_norm = (
        math.lgamma((nu + 1.0) / 2.0)
        - math.lgamma(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
    )

    return Density(
        name="student_t",
        support=REAL_LINE,
        log_pdf=lambda x: log_norm - 0.5 * (nu + 1.0) * math.log1p(x * x / nu),
        analytic_score=lambda x: -(nu + 1.0) * x / (nu + x * x),
        analytic_score_deriv=lambda x: -(nu + 1.0) * (nu - x * x) / (nu + x * x) ** 2,
        symmetric=True,
        params={"nu": nu},
        _quantile=lambda u: float(_sp.stdtrit(nu, u)),
    )


def _gamma(k: float, theta: float) -> Density:
    if k <= 0.0:
        raise InvalidParameter(f"k must be positive, got {k}")
    if theta <= 0.0:
        raise InvalidParameter(f"theta must be positive, got {theta}")
    log_norm = math.lgamma(k) + k * math.log(theta)

    return Density(
        name="gamma",
        support=POSITIVE_HALF_LINE,
        log_pdf=lambda x: (k - 1.0) * math.log(x) - x / theta - log_norm,
        analytic_score=lambda x: (k - 1.0) / x - 1.0 / theta,
        analytic_score_deriv=lambda x: -(k - 1.0) / (x * x),
        symmetric=False,
        params={"k": k, "theta": theta},
        _quantile=lambda u: theta * float(_sp.gammaincinv(k, u)),
    )


def _logistic(mu: float, s: float) -> Density:
    if s <= 0.0:
        raise InvalidParameter(f"s must be positive, got {s}")
    log_s = math.log(s)

    def lp(x: float) -> float:
        z = abs(x - mu) / s
        return -z - 2.0 * math.log1p(math.exp(-z)) - log_s

    def phi_prime(x: float) -> float:
        z = abs(x - mu) / s
        t = math.exp(-0.5 * z)
        sech_half = 2.0 * t / (1.0 + t * t)
        return -sech_half * sech_half / (2.0 * s * s)

    return Density(
        name="logistic",
        support=REAL_LINE,
        log_pdf=lp,
        analytic_score=lambda x: -math.tanh((x - mu) / (2.0 * s)) / s,
        analytic_score_deriv=phi_prime,
        symmetric=mu == 0.0,
        params={"mu": mu, "s": s},
        _quantile=lambda u: mu + s * (math.log(u) - math.log1p(-u)),
    )


BUILTIN_FAMILIES: Mapping[str, Tuple[Callable[..., Density], Mapping[str, float]]] = {
    "normal": (_normal, {"mu": 0.0, "sigma": 1.0}),
    "exponential": (_exponential, {"lam": 1.0}),
    "laplace": (_laplace, {"mu": 0.0, "b": 1.0}),
    "gumbel": (_gumbel, {"mu": 0.0, "beta": 1.0}),
    "student_t": (_student_t, {"nu": 3.0}),
    "gamma": (_gamma, {"k": 2.0, "theta": 1.0}),
    "logistic": (_logistic, {"mu": 0.0, "s": 1.0}),
}


def make_builtin(family: str, **params: float) -> Density:
    """Construct a built-in density family by name.

    Recognised families: normal(mu, sigma), exponential(lam),
    laplace(mu, b), gumbel(mu, beta), student_t(nu), gamma(k, theta),
    logistic(mu, s).  Omitted parameters take the standard defaults.
    """
    key = family.strip().lower().replace("-", "_")
    if key not in BUILTIN_FAMILIES:
        raise UnknownFamily(
            f"unknown family {family!r}; choose from {sorted(BUILTIN_FAMILIES)}"
        )
    ctor, defaults = BUILTIN_FAMILIES[key]
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParameter(
            f"{key} does not take parameters {sorted(unknown)}; accepts {sorted(defaults)}"
        )
    merged = {**defaults, **{k: float(v) for k, v in params.items()}}
    return ctor(**merged)


# ---------------------------------------------------------------------------
# score evaluation


def _check_interior(d: Density, x: float) -> None:
    if not d.support.contains(x):
        raise OutOfSupport(f"x = {x} outside support ({d.support.a}, {d.support.b}) of {d.name}")


def _check_differentiable(d: Density, x: float) -> None:
    for pt in d.exception_points:
        if abs(x - pt) <= 1e-12 * max(1.0, abs(pt)):
            raise NonDifferentiablePoint(
                f"score of {d.name} does not exist at x = {pt}"
            )


def _phi(d: Density, x: float) -> Tuple[float, str]:
    if d.analytic_score is not None:
        return d.analytic_score(x), "analytic"
    return central_diff(d.log_pdf, x, order=1), "finite-difference"


def location_score(d: Density, x: float) -> ScoreEvaluation:
    """Evaluate phi = (log p)' at x, along with psi = 1 + x * phi."""
    _check_interior(d, x)
    _check_differentiable(d, x)
    phi, source = _phi(d, x)
    if not math.isfinite(phi):
        raise NonFinite(f"score of {d.name} evaluated to {phi!r} at x = {x}")
    return ScoreEvaluation(x=x, phi=phi, psi=1.0 + x * phi, source=source)


def scale_score(d: Density, x: float) -> ScoreEvaluation:
    """Evaluate the scale score psi = 1 + x * phi at x.

    Same computation as `location_score`; provided separately because the
    scale-family estimating equation sums psi rather than phi.
    """
    return location_score(d, x)


def score_deriv(d: Density, x: float) -> float:
    """phi'(x), analytic where registered, otherwise finite-difference."""
    _check_interior(d, x)
    _check_differentiable(d, x)
    if d.analytic_score_deriv is not None:
        return d.analytic_score_deriv(x)
    if d.analytic_score is not None:
        return central_diff(d.analytic_score, x, order=1)
    return central_diff(d.log_pdf, x, order=2)


# ---------------------------------------------------------------------------
# pdf / cdf / quantile / sampling


def pdf(d: Density, x: float) -> float:
    """Density value; zero outside the support."""
    if not d.support.contains(x):
        return 0.0
    lp = d.log_pdf(x)
    if lp <= -745.0:
        return 0.0
    return math.exp(lp) if lp < 710.0 else math.inf


def _interior_breakpoints(d: Density, lo: float, hi: float) -> Tuple[float, ...]:
    return tuple(p for p in sorted(d.exception_points) if lo < p < hi)


def integrate_density(
    d: Density,
    f: Callable[[float], float],
    spec: QuadratureSpec | None = None,
    lo: float | None = None,
    hi: float | None = None,
) -> float:
    """Integrate ``f(x) * p(x)`` over the support, splitting at score kinks."""
    a = d.support.a if lo is None else lo
    b = d.support.b if hi is None else hi

    def integrand(x: float) -> float:
        q = pdf(d, x)
        if q == 0.0:
            # where the density has underflowed, f may have overflowed (a
            # gumbel score at x = -900, say); the true product is still zero
            return 0.0
        return f(x) * q

    return integrate(
        integrand,
        a,
        b,
        spec,
        breakpoints=_interior_breakpoints(d, a, b),
    )


def normalization_gap(d: Density, spec: QuadratureSpec | None = None) -> float:
    """|integral of p - 1|; should be at tolerance level for any Density."""
    return abs(integrate_density(d, lambda x: 1.0, spec) - 1.0)


def cdf(d: Density, x: float, spec: QuadratureSpec | None = None) -> float:
    if x <= d.support.a:
        return 0.0
    if x >= d.support.b:
        return 1.0
    return min(1.0, max(0.0, integrate_density(d, lambda t: 1.0, spec, hi=x)))


@lru_cache(maxsize=None)
def _numeric_quantile_anchor(d: Density) -> float:
    # a finite interior point to expand probes from
    a, b = d.support.a, d.support.b
    if math.isfinite(a) and math.isfinite(b):
        return 0.5 * (a + b)
    if math.isfinite(a):
        return a + 1.0
    if math.isfinite(b):
        return b - 1.0
    return 0.0


def quantile(d: Density, u: float, spec: QuadratureSpec | None = None) -> float:
    """Inverse cdf at u, analytic where the family has one."""
    if not 0.0 < u < 1.0:
        raise InvalidParameter(f"quantile level must lie in (0, 1), got {u}")
    if d._quantile is not None:
        return float(d._quantile(u))

    anchor = _numeric_quantile_anchor(d)
    lo = hi = anchor
    step = 1.0
    while cdf(d, lo, spec) > u:
        lo -= step
        step *= 2.0
        if lo <= d.support.a:
            lo = d.support.a + (anchor - d.support.a) * 1e-12
            break
    step = 1.0
    while cdf(d, hi, spec) < u:
        hi += step
        step *= 2.0
        if hi >= d.support.b:
            hi = d.support.b - (d.support.b - anchor) * 1e-12
            break
    bracket = Bracket.from_function(lambda t: cdf(d, t, spec) - u, lo, hi)
    return find_root(lambda t: cdf(d, t, spec) - u, bracket, tol=1e-10)


def central_region(
    d: Density, mass: float = 0.99, spec: QuadratureSpec | None = None
) -> Tuple[float, float]:
    """Interval holding the central ``mass`` of probability."""
    if not 0.0 < mass < 1.0:
        raise InvalidParameter(f"mass must lie in (0, 1), got {mass}")
    alpha = 0.5 * (1.0 - mass)
    return quantile(d, alpha, spec), quantile(d, 1.0 - alpha, spec)


def evaluation_grid(
    d: Density, n: int = 101, mass: float = 0.99
) -> NDArray[np.float64]:
    """Equispaced grid over the central region, nudged off score kinks."""
    lo, hi = central_region(d, mass)
    xs = np.linspace(lo, hi, n)
    if d.exception_points:
        h = (hi - lo) / max(n - 1, 1)
        for pt in d.exception_points:
            near = np.abs(xs - pt) < 1e-9 * max(1.0, abs(pt)) + 1e-300
            xs[near] += 1e-3 * h
    return xs


def sample(
    d: Density,
    n: int,
    seed: int | np.random.Generator = 0,
    spec: QuadratureSpec | None = None,
) -> NDArray[np.float64]:
    """Draw n variates by inverse cdf over a seeded uniform stream."""
    if n < 0:
        raise InvalidParameter(f"sample size must be nonnegative, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.uniform(size=n)
    return np.array([quantile(d, ui, spec) for ui in u], dtype=np.float64)


# ---------------------------------------------------------------------------
# score zero-mean diagnostic


def score_zero_mean_check(d: Density, spec: QuadratureSpec | None = None) -> float:
    """|E[phi(X)]| under d.

    Zero whenever the density vanishes at both support endpoints (the
    boundary terms of the integration by parts drop); e.g. the exponential,
    whose density jumps at 0, honestly reports the gap lam.
    """
    def phi_val(x: float) -> float:
        val, _ = _phi(d, x)
        return val

    return abs(integrate_density(d, phi_val, spec))


# ---------------------------------------------------------------------------
# derived densities


def _resolved_score(d: Density) -> Callable[[float], float]:
    if d.analytic_score is not None:
        return d.analytic_score
    return lambda x: central_diff(d.log_pdf, x, order=1)


def _resolved_score_deriv(d: Density) -> Callable[[float], float]:
    if d.analytic_score_deriv is not None:
        return d.analytic_score_deriv
    if d.analytic_score is not None:
        sc = d.analytic_score
        return lambda x: central_diff(sc, x, order=1)
    return lambda x: central_diff(d.log_pdf, x, order=2)


def _normalizer(log_kernel: Callable[[float], float], support: SupportInterval,
                spec: QuadratureSpec | None, what: str) -> float:
    def kernel(x: float) -> float:
        lv = log_kernel(x)
        if lv <= -745.0:
            return 0.0
        return math.exp(lv) if lv < 710.0 else math.inf

    try:
        z = integrate(kernel, support.a, support.b, spec)
    except (NonConvergence, NonFinite) as exc:
        raise NotIntegrable(f"{what} does not integrate: {exc}") from exc
    if not math.isfinite(z) or z <= 0.0:
        raise NormalizationFailure(f"normalising constant for {what} came out {z!r}")
    return z


def power_density(d: Density, c: float, spec: QuadratureSpec | None = None) -> Density:
    """The normalised density proportional to p(x)**c.

    Its location score is exactly c * phi_p.  For the standard normal this
    is another normal with sigma = 1/sqrt(c); for the Laplace, a Laplace
    with scale b/c.
    """
    if not (math.isfinite(c) and c > 0.0):
        raise InvalidParameter(f"power must be finite and positive, got {c}")
    base_lp = d.log_pdf
    z = _normalizer(lambda x: c * base_lp(x), d.support, spec, f"p^{c:g} for {d.name}")
    log_z = math.log(z)
    base_phi = _resolved_score(d)
    base_phi_prime = _resolved_score_deriv(d)

    return Density(
        name=f"power({d.name}, c={c:g})",
        support=d.support,
        log_pdf=lambda x: c * base_lp(x) - log_z,
        analytic_score=lambda x: c * base_phi(x),
        analytic_score_deriv=lambda x: c * base_phi_prime(x),
        symmetric=d.symmetric,
        params={**dict(d.params), "c": c},
        exception_points=d.exception_points,
    )


def density_from_expression(
    name: str,
    log_pdf_text: str,
    support: SupportInterval,
    params: Mapping[str, float] | None = None,
    symmetric: bool = False,
    spec: QuadratureSpec | None = None,
) -> Density:
    """Build a Density from a log-pdf expression, normalising numerically.

    The expression follows the grammar in `scorekit.expressions`.  The
    symmetric flag is verified on a grid; scores come from finite
    differences of the compiled log-density.
    """
    kernel = compile_expression(log_pdf_text, params=params)
    z = _normalizer(kernel, support, spec, f"expression density {name!r}")
    log_z = math.log(z)
    d = Density(
        name=name,
        support=support,
        log_pdf=lambda x: kernel(x) - log_z,
        symmetric=symmetric,
        params=dict(params or {}),
    )
    if symmetric:
        if not (support.a == -support.b):
            raise InvalidParameter(
                f"symmetric flag needs a symmetric support, got ({support.a}, {support.b})"
            )
        for x in np.linspace(0.1, min(abs(support.b) * 0.9, 5.0), 11):
            gap = abs(d.log_pdf(float(x)) - d.log_pdf(float(-x)))
            if gap > 1e-9:
                raise NotSymmetric(
                    f"density {name!r} declared symmetric but log-pdf differs by {gap:.2e} at +/-{x:.3g}"
                )
    return d
