"""Skew-symmetric families and the singularity of their information matrix.

A model here is ``(2/sigma) * q(z) * F(delta * w(z))`` with ``z = (x - mu)
/ sigma``: a symmetric base density q, a symmetric skewing cdf F, and a
skewing argument w.  Odd arguments leave the normalisation at one for
every delta; even arguments need a numeric normalising constant.

At ``delta = 0`` the three parameter scores are built by composition:

* location:  ``-phi_q(z) / sigma``
* scale:     ``-psi_q(z) / sigma``
* skewness:  ``2 F'(0) w(z)``, centred by ``E_q[w]`` for even arguments.

The Fisher information is singular exactly when the skewness score is a
linear combination of the other two.  With ``w = phi_p`` that happens for
every F as soon as ``phi_q`` is proportional to ``phi_p``; with
``w = psi_p`` it happens iff ``psi_q = c1 * psi_p + c2``, and
`construct_singular_scale_pair` builds the base density solving that
equation for a given (c1, c2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import special as _sp

from .density import (
    Density,
    evaluation_grid,
    integrate_density,
    pdf,
)
from .errors import (
    DegenerateBase,
    InvalidParameter,
    NonConvergence,
    NormalizationFailure,
    NotIntegrable,
    ParityViolation,
    UnknownFamily,
)
from .numerics import QuadratureSpec, central_diff, eig_sym3, integrate

__all__ = [
    "SkewingArgument",
    "SkewingCdf",
    "SkewSymmetricModel",
    "FisherInfoResult",
    "SingularityReport",
    "identity_argument",
    "location_score_argument",
    "scale_score_argument",
    "skew_t_argument",
    "custom_argument",
    "make_skewing_cdf",
    "skew_density",
    "scores_at_symmetry",
    "scores_fd_crosscheck",
    "fisher_info_at_symmetry",
    "construct_singular_scale_pair",
    "singularity_report",
]

_PARITY_GRID = (0.31, 0.77, 1.23, 1.91, 2.57, 3.42)


def _resolved_score(d: Density) -> Callable[[float], float]:
    if d.analytic_score is not None:
        return d.analytic_score
    return lambda x: central_diff(d.log_pdf, x, order=1)


@dataclass(frozen=True, eq=False)
class SkewingArgument:
    """The function w(z) fed to the skewing cdf, with declared parity."""

    kind: str
    parity: str
    w: Callable[[float], float]
    p: Optional[Density] = None
    nu: Optional[float] = None
    exception_points: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.parity not in ("odd", "even"):
            raise InvalidParameter(f"parity must be 'odd' or 'even', got {self.parity!r}")
        for z in _PARITY_GRID:
            if any(abs(z - pt) < 1e-9 or abs(-z - pt) < 1e-9 for pt in self.exception_points):
                continue
            lhs = self.w(z)
            rhs = self.w(-z)
            gap = abs(lhs + rhs) if self.parity == "odd" else abs(lhs - rhs)
            if gap > 1e-9 * max(1.0, abs(lhs)):
                raise ParityViolation(
                    f"argument declared {self.parity} but w({z}) = {lhs:.6g}, "
                    f"w({-z}) = {rhs:.6g}"
                )


def identity_argument() -> SkewingArgument:
    return SkewingArgument(kind="identity", parity="odd", w=lambda z: z)


def _require_symmetric(p: Density, what: str) -> None:
    if not p.symmetric:
        raise ParityViolation(f"{what} needs a symmetric density, {p.name} is not")


def location_score_argument(p: Density) -> SkewingArgument:
    """w = phi_p; odd because p is symmetric."""
    _require_symmetric(p, "a location-score argument")
    return SkewingArgument(
        kind="location_score",
        parity="odd",
        w=_resolved_score(p),
        p=p,
        exception_points=p.exception_points,
    )


def scale_score_argument(p: Density) -> SkewingArgument:
    """w = psi_p = 1 + z * phi_p; even because p is symmetric."""
    _require_symmetric(p, "a scale-score argument")
    phi = _resolved_score(p)
    return SkewingArgument(
        kind="scale_score",
        parity="even",
        w=lambda z: 1.0 + z * phi(z),
        p=p,
        exception_points=p.exception_points,
    )


def skew_t_argument(nu: float) -> SkewingArgument:
    """w(z) = z * sqrt((nu + 1) / (nu + z^2)), the skew-t argument."""
    if nu <= 0.0:
        raise InvalidParameter(f"nu must be positive, got {nu}")
    return SkewingArgument(
        kind="skew_t",
        parity="odd",
        w=lambda z: z * math.sqrt((nu + 1.0) / (nu + z * z)),
        nu=nu,
    )


def custom_argument(
    w: Callable[[float], float],
    parity: str,
    exception_points: Tuple[float, ...] = (),
) -> SkewingArgument:
    return SkewingArgument(kind="custom", parity=parity, w=w, exception_points=exception_points)


@dataclass(frozen=True, eq=False)
class SkewingCdf:
    """A symmetric cdf F with F(0) = 1/2, plus its density at zero."""

    name: str
    cdf: Callable[[float], float]
    pdf0: float

    def __post_init__(self) -> None:
        if abs(self.cdf(0.0) - 0.5) > 1e-12:
            raise InvalidParameter(f"{self.name}: F(0) = {self.cdf(0.0)!r}, expected 1/2")
        for t in _PARITY_GRID:
            gap = abs(self.cdf(t) + self.cdf(-t) - 1.0)
            if gap > 1e-12:
                raise InvalidParameter(
                    f"{self.name}: F({t}) + F({-t}) - 1 = {gap:.2e}, cdf is not symmetric"
                )
        if self.pdf0 <= 0.0:
            raise InvalidParameter(f"{self.name}: F'(0) must be positive, got {self.pdf0}")


def make_skewing_cdf(name: str, nu: Optional[float] = None) -> SkewingCdf:
    """Named skewing cdfs: normal, logistic, student (with nu)."""
    key = name.strip().lower()
    if key == "normal":
        return SkewingCdf("normal", lambda t: float(_sp.ndtr(t)), 1.0 / math.sqrt(2.0 * math.pi))
    if key == "logistic":
        return SkewingCdf("logistic", lambda t: 0.5 * (1.0 + math.tanh(0.5 * t)), 0.25)
    if key == "student":
        if nu is None or nu <= 0.0:
            raise InvalidParameter("student skewing cdf needs nu > 0")
        pdf0 = math.exp(
            math.lgamma((nu + 1.0) / 2.0)
            - math.lgamma(nu / 2.0)
            - 0.5 * math.log(nu * math.pi)
        )
        return SkewingCdf(f"student({nu:g})", lambda t: float(_sp.stdtr(nu, t)), pdf0)
    raise UnknownFamily(f"unknown skewing cdf {name!r}; choose normal, logistic or student")


@dataclass(frozen=True, eq=False)
class SkewSymmetricModel:
    """(2/sigma) q(z) F(delta w(z)) with z = (x - mu) / sigma."""

    base: Density
    skewing_cdf: SkewingCdf
    arg: SkewingArgument
    mu: float = 0.0
    sigma: float = 1.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise InvalidParameter(f"sigma must be positive, got {self.sigma}")
        if not self.base.symmetric:
            raise InvalidParameter(f"base density must be symmetric, {self.base.name} is not")

    def describe(self) -> str:
        return (
            f"base={self.base.name}, F={self.skewing_cdf.name}, arg={self.arg.kind}, "
            f"mu={self.mu:g}, sigma={self.sigma:g}, delta={self.delta:g}"
        )


@dataclass(frozen=True)
class FisherInfoResult:
    """Information matrix at delta = 0 in the order (mu, sigma, delta).

    ``rank_at_tol`` counts eigenvalues above ``rank_tol`` times the largest.
    ``collinearity`` is the weighted least-squares fit of the base score of
    matching parity against {w, 1}: for even arguments these are the
    (c1, c2) with psi_q ~= c1 * w + c2; present only when the rank drops.
    """

    matrix: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    min_rel_eigenvalue: float
    rank_at_tol: int
    rank_tol: float
    collinearity: Optional[Tuple[float, float]]


@dataclass(frozen=True)
class SingularityReport:
    model: str
    singular: bool
    info: FisherInfoResult


_BREAK_CACHE_SPEC = QuadratureSpec()


def _model_breakpoints(m: SkewSymmetricModel) -> Tuple[float, ...]:
    return tuple(sorted(set(m.base.exception_points) | set(m.arg.exception_points)))


@lru_cache(maxsize=None)
def _even_normalizer(m: SkewSymmetricModel) -> float:
    def kernel(z: float) -> float:
        return 2.0 * pdf(m.base, z) * m.skewing_cdf.cdf(m.delta * m.arg.w(z))

    try:
        c = integrate(
            kernel,
            m.base.support.a,
            m.base.support.b,
            _BREAK_CACHE_SPEC,
            breakpoints=_model_breakpoints(m),
        )
    except NonConvergence as exc:
        raise NormalizationFailure(f"normaliser for {m.describe()} did not converge: {exc}") from exc
    if not math.isfinite(c) or c <= 0.0:
        raise NormalizationFailure(f"normaliser for {m.describe()} came out {c!r}")
    return c


@lru_cache(maxsize=None)
def _arg_mean(m: SkewSymmetricModel) -> float:
    """E_q[w], the centring constant for even skewing arguments."""
    return integrate(
        lambda z: m.arg.w(z) * pdf(m.base, z),
        m.base.support.a,
        m.base.support.b,
        _BREAK_CACHE_SPEC,
        breakpoints=_model_breakpoints(m),
    )


def skew_density(m: SkewSymmetricModel, x: float) -> float:
    """Model density at x (zero outside the transformed base support)."""
    z = (x - m.mu) / m.sigma
    if not m.base.support.contains(z):
        return 0.0
    val = 2.0 / m.sigma * pdf(m.base, z) * m.skewing_cdf.cdf(m.delta * m.arg.w(z))
    if m.arg.parity == "even" and m.delta != 0.0:
        val /= _even_normalizer(m)
    return val


def scores_at_symmetry(
    m: SkewSymmetricModel,
) -> Tuple[Callable[[float], float], Callable[[float], float], Callable[[float], float]]:
    """Score functions (s_mu, s_sigma, s_delta) of x, valid at delta = 0."""
    if m.delta != 0.0:
        raise InvalidParameter(f"scores_at_symmetry needs delta = 0, got {m.delta}")
    phi_q = _resolved_score(m.base)
    sigma = m.sigma
    mu = m.mu
    two_f0 = 2.0 * m.skewing_cdf.pdf0
    w = m.arg.w

    def s_mu(x: float) -> float:
        return -phi_q((x - mu) / sigma) / sigma

    def s_sigma(x: float) -> float:
        z = (x - mu) / sigma
        return -(1.0 + z * phi_q(z)) / sigma

    if m.arg.parity == "odd":

        def s_delta(x: float) -> float:
            return two_f0 * w((x - mu) / sigma)

    else:
        centre = _arg_mean(m)

        def s_delta(x: float) -> float:
            return two_f0 * (w((x - mu) / sigma) - centre)

    return s_mu, s_sigma, s_delta


def scores_fd_crosscheck(m: SkewSymmetricModel, n_points: int = 21) -> float:
    """Max gap between composed scores and finite differences of log f.

    Differentiates the normalised log-density numerically in each parameter
    at delta = 0 and compares against `scores_at_symmetry` on a grid.  A
    diagnostic, not a production path.
    """
    s_mu, s_sigma, s_delta = scores_at_symmetry(m)
    grid = evaluation_grid(m.base, n=n_points, mass=0.98)
    worst = 0.0
    for z in grid:
        x = m.mu + m.sigma * float(z)

        def log_f(mu: float, sigma: float, delta: float) -> float:
            mm = SkewSymmetricModel(
                base=m.base, skewing_cdf=m.skewing_cdf, arg=m.arg,
                mu=mu, sigma=sigma, delta=delta,
            )
            return math.log(skew_density(mm, x))

        fd = (
            central_diff(lambda t: log_f(t, m.sigma, 0.0), m.mu),
            central_diff(lambda t: log_f(m.mu, t, 0.0), m.sigma),
            central_diff(lambda t: log_f(m.mu, m.sigma, t), 0.0),
        )
        an = (s_mu(x), s_sigma(x), s_delta(x))
        worst = max(worst, max(abs(a - b) for a, b in zip(an, fd)))
    return worst


def _collinearity_fit(m: SkewSymmetricModel) -> Tuple[float, float]:
    """Weighted LSQ of the matching-parity base score against {w, 1}."""
    phi_q = _resolved_score(m.base)
    if m.arg.parity == "odd":
        target = phi_q
    else:
        target = lambda z: 1.0 + z * phi_q(z)
    grid = evaluation_grid(m.base, n=101, mass=0.99)
    pts = [
        float(z)
        for z in grid
        if all(abs(z - pt) > 1e-9 for pt in _model_breakpoints(m))
    ]
    wts = np.sqrt([pdf(m.base, z) for z in pts])
    a = np.column_stack([
        wts * np.array([m.arg.w(z) for z in pts]),
        wts,
    ])
    y = wts * np.array([target(z) for z in pts])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0]), float(coef[1])


def fisher_info_at_symmetry(
    m: SkewSymmetricModel,
    rank_tol: float = 1e-6,
    spec: Optional[QuadratureSpec] = None,
) -> FisherInfoResult:
    """Information matrix of (mu, sigma, delta) at the symmetric point.

    Entries are integrals of score products against the base density,
    computed in z-space and split at registered score singularities.
    """
    if m.delta != 0.0:
        raise InvalidParameter(f"fisher_info_at_symmetry needs delta = 0, got {m.delta}")
    if rank_tol <= 0.0:
        raise InvalidParameter(f"rank_tol must be positive, got {rank_tol}")

    phi_q = _resolved_score(m.base)
    two_f0 = 2.0 * m.skewing_cdf.pdf0
    w = m.arg.w
    centre = _arg_mean(m) if m.arg.parity == "even" else 0.0

    t_mu = lambda z: -phi_q(z) / m.sigma
    t_sigma = lambda z: -(1.0 + z * phi_q(z)) / m.sigma
    t_delta = lambda z: two_f0 * (w(z) - centre)
    scores = (t_mu, t_sigma, t_delta)

    breaks = _model_breakpoints(m)
    mat = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            val = integrate(
                lambda z: scores[i](z) * scores[j](z) * pdf(m.base, z),
                m.base.support.a,
                m.base.support.b,
                spec,
                breakpoints=breaks,
            )
            mat[i, j] = mat[j, i] = val

    eigenvalues, _ = eig_sym3(mat)
    lam_max = float(eigenvalues[-1])
    if lam_max <= 0.0:
        raise DegenerateBase(f"information matrix of {m.describe()} has no positive eigenvalue")
    rank = int(np.sum(eigenvalues > rank_tol * lam_max))
    collinearity = _collinearity_fit(m) if rank < 3 else None
    return FisherInfoResult(
        matrix=mat,
        eigenvalues=eigenvalues,
        min_rel_eigenvalue=float(eigenvalues[0] / lam_max),
        rank_at_tol=rank,
        rank_tol=rank_tol,
        collinearity=collinearity,
    )


def singularity_report(
    m: SkewSymmetricModel,
    rank_tol: float = 1e-6,
    spec: Optional[QuadratureSpec] = None,
) -> SingularityReport:
    info = fisher_info_at_symmetry(m, rank_tol, spec)
    return SingularityReport(
        model=m.describe(),
        singular=info.rank_at_tol < 3,
        info=info,
    )


def construct_singular_scale_pair(
    p: Density,
    c1: float,
    c2: float,
    spec: Optional[QuadratureSpec] = None,
) -> Density:
    """The symmetric density q with psi_q = c1 * psi_p + c2.

    Solving the defining ODE gives ``q(x) proportional to |x|**(c1 + c2 - 1)
    * p(x)**c1``; for q to be a genuine symmetric density the exponent sum
    c1 + c2 must be an odd positive integer.  The scale-score skewed family
    built on (q, psi_p) then has a rank-2 information matrix for every
    skewing cdf.
    """
    _require_symmetric(p, "construct_singular_scale_pair")
    total = c1 + c2
    nearest = round(total)
    if abs(total - nearest) > 1e-9 or nearest < 1 or nearest % 2 == 0:
        raise ParityViolation(
            f"c1 + c2 must be an odd positive integer, got {c1:g} + {c2:g} = {total:g}"
        )
    m_exp = int(nearest) - 1
    base_lp = p.log_pdf
    phi_p = _resolved_score(p)

    if m_exp == 0:
        log_kernel = lambda x: c1 * base_lp(x)
    else:
        def log_kernel(x: float) -> float:
            if x == 0.0:
                return -math.inf
            return m_exp * math.log(abs(x)) + c1 * base_lp(x)

    def kernel(x: float) -> float:
        lv = log_kernel(x)
        return math.exp(lv) if lv > -745.0 else 0.0

    extra = (0.0,) if m_exp > 0 else ()
    breaks = tuple(sorted(set(p.exception_points) | set(extra)))
    try:
        z_const = integrate(kernel, p.support.a, p.support.b, spec, breakpoints=breaks)
    except NonConvergence as exc:
        raise NotIntegrable(
            f"|x|^{m_exp} * {p.name}^{c1:g} does not integrate: {exc}"
        ) from exc
    if not math.isfinite(z_const) or z_const <= 0.0:
        raise NotIntegrable(f"normaliser came out {z_const!r}")
    log_z = math.log(z_const)

    def score(x: float) -> float:
        return (m_exp / x if m_exp else 0.0) + c1 * phi_p(x)

    phi_p_prime = (
        p.analytic_score_deriv
        if p.analytic_score_deriv is not None
        else (lambda x: central_diff(phi_p, x, order=1))
    )

    q = Density(
        name=f"scale_pair({p.name}, c1={c1:g}, c2={c2:g})",
        support=p.support,
        log_pdf=lambda x: log_kernel(x) - log_z,
        analytic_score=score,
        analytic_score_deriv=lambda x: (-m_exp / (x * x) if m_exp else 0.0) + c1 * phi_p_prime(x),
        symmetric=True,
        params={"c1": c1, "c2": c2},
        exception_points=breaks,
    )

    # cross-check the defining relation with finite differences of log q
    for z in _PARITY_GRID:
        if any(abs(z - pt) < 1e-6 for pt in breaks):
            continue
        psi_fd = 1.0 + z * central_diff(q.log_pdf, z, order=1)
        psi_target = c1 * (1.0 + z * phi_p(z)) + c2
        if abs(psi_fd - psi_target) > 1e-7 * max(1.0, abs(psi_target)):
            raise NormalizationFailure(
                f"constructed pair violates the scale-score relation at z = {z}: "
                f"{psi_fd:.9g} vs {psi_target:.9g}"
            )
    return q
