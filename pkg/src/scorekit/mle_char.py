"""Score-equation solvers and estimator-characterization checks.

Location families shift a fixed density, scale families stretch it as
``(1/s) p(x/s)``.  Stationarity of the log-likelihood reduces to a root
of the summed location score ``h(mu) = sum phi(x_i - mu)`` or of the
summed scale score ``h(s) = sum psi(x_i / s)``.  The solvers here find
those roots and the Monte Carlo driver compares them against closed-form
estimators (mean, median, RMS) over many seeded samples: agreement for
every sample is what singles out the normal, Laplace and exponential
families.

The functional-equation route is also executable: a linear location
score satisfies additivity score(a + b) = score(a) + score(b), and
`cauchy_additivity_check` measures the worst violation on a pair grid.
The witness generators produce the zero-mean sample configurations that
turn the score equation into that functional equation.
"""

from __future__ import annotations

import math
import os
import statistics
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .density import Density, evaluation_grid, sample
from .errors import (
    EmptySample,
    InvalidParameter,
    NoCrossing,
    NotLogConcave,
    NotMonotone,
    OutOfSupport,
    ScorekitError,
)
from .numerics import Bracket, central_diff, find_root

__all__ = [
    "ScoreEquationSolution",
    "CharacterizationReport",
    "solve_location_mle",
    "solve_scale_mle",
    "verify_characterization",
    "cauchy_additivity_check",
    "witness_opposite_pair",
    "witness_zero_mean_triple",
    "witness_pair_grid",
    "fit_power_relation",
]

_MAX_EXPANSIONS = 60


@dataclass(frozen=True)
class ScoreEquationSolution:
    """Root of a summed score equation.

    ``residual`` is the score sum at the estimate; for a piecewise
    constant score it is the sign-sum over observations distinct from
    the estimate, whose vanishing characterizes the solution set.
    ``nonuniqueness_interval`` is set when that set is a whole interval.
    """

    estimate: float
    residual: float
    iterations: int
    bracket_used: Bracket
    nonuniqueness_interval: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class CharacterizationReport:
    n_trials: int
    sample_size: int
    max_abs_gap: float
    seed: int
    failures: int = 0


def _score_of(d: Density) -> Callable[[float], float]:
    if d.analytic_score is not None:
        return d.analytic_score
    return lambda x: central_diff(d.log_pdf, x, order=1)


def _score_deriv_of(d: Density) -> Callable[[float], float]:
    if d.analytic_score_deriv is not None:
        return d.analytic_score_deriv
    score = _score_of(d)
    return lambda x: central_diff(score, x, order=1)


def _admissibility_grid(d: Density) -> Tuple[List[float], List[float]]:
    grid = [float(z) for z in evaluation_grid(d, n=101, mass=0.99)]
    score = _score_of(d)
    return grid, [score(z) for z in grid]


def _check_location_admissible(d: Density) -> None:
    """Location solving needs a non-increasing score that changes sign."""
    grid, vals = _admissibility_grid(d)
    ref = max(max(abs(v) for v in vals), 1.0)
    for a, b in zip(vals, vals[1:]):
        if b > a + 1e-9 * ref:
            raise NotLogConcave(
                f"location score of {d.name} increases on the verification grid"
            )
    if not (min(vals) < 0.0 < max(vals)):
        raise NoCrossing(
            f"location score of {d.name} never crosses zero; "
            "the likelihood is monotone in the location parameter"
        )


def _is_step_score(d: Density, grid: Sequence[float]) -> bool:
    deriv = _score_deriv_of(d)
    score = _score_of(d)
    probes = [grid[i] for i in (10, 30, 50, 70, 90) if i < len(grid)]
    for z in probes:
        if any(abs(z - pt) < 1e-6 for pt in d.exception_points):
            continue
        if abs(deriv(z)) > 1e-10 * max(1.0, abs(score(z))):
            return False
    return True


def _expand_monotone(
    h: Callable[[float], float],
    lo: float,
    hi: float,
    feas_lo: float,
    feas_hi: float,
) -> Bracket:
    """Bracket a root of a non-decreasing h inside the open feasible set."""
    span = max(hi - lo, 1.0)
    if lo == hi:
        # constant samples give a degenerate seed interval
        lo -= 0.5 * span
        hi += 0.5 * span
    if math.isfinite(feas_hi):
        hi = min(hi, feas_hi - span * 2.0**-20)
        lo = min(lo, feas_hi - span)
    if math.isfinite(feas_lo):
        lo = max(lo, feas_lo + span * 2.0**-20)
        hi = max(hi, feas_lo + span)
    if not lo < hi:
        lo, hi = hi, lo
    f_lo, f_hi = h(lo), h(hi)
    for _ in range(_MAX_EXPANSIONS):
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo < 0.0) != (f_hi < 0.0):
            return Bracket(lo, hi, f_lo, f_hi)
        if f_lo > 0.0:
            lo = lo - span if not math.isfinite(feas_lo) else 0.5 * (lo + feas_lo)
            span *= 2.0
            f_lo = h(lo)
        else:
            hi = hi + span if not math.isfinite(feas_hi) else 0.5 * (hi + feas_hi)
            span *= 2.0
            f_hi = h(hi)
    raise NoCrossing("score sum kept its sign after 60 bracket expansions")


def solve_location_mle(d: Density, xs: Sequence[float]) -> ScoreEquationSolution:
    """Root of sum(phi_d(x_i - mu)) in mu, the location-family MLE.

    Piecewise-constant scores (the Laplace case) make the score sum a
    step function whose zero set is a median interval; the estimate is
    then the sample median, midpoint convention for even sizes, and the
    interval is reported.
    """
    xs = [float(v) for v in xs]
    if not xs:
        raise EmptySample("location MLE needs at least one observation")
    _check_location_admissible(d)
    grid, _ = _admissibility_grid(d)
    score = _score_of(d)
    lo0, hi0 = min(xs), max(xs)
    # mu must keep every x - mu inside the support
    feas_lo = hi0 - d.support.b
    feas_hi = lo0 - d.support.a

    evals = 0

    def h(mu: float) -> float:
        nonlocal evals
        evals += 1
        return math.fsum(score(x - mu) for x in xs)

    if _is_step_score(d, grid):
        ordered = sorted(xs)
        n = len(ordered)
        if n % 2:
            est = ordered[n // 2]
            interval = (est, est)
        else:
            interval = (ordered[n // 2 - 1], ordered[n // 2])
            est = 0.5 * (interval[0] + interval[1])
        span = max(hi0 - lo0, 1.0)
        lo, hi = lo0 - span, hi0 + span
        bracket = Bracket(lo, hi, h(lo), h(hi))
        resid = math.fsum(score(x - est) for x in ordered if x != est)
        return ScoreEquationSolution(
            estimate=est,
            residual=resid,
            iterations=evals,
            bracket_used=bracket,
            nonuniqueness_interval=interval,
        )

    bracket = _expand_monotone(h, lo0, hi0, feas_lo, feas_hi)
    root = find_root(h, bracket)
    return ScoreEquationSolution(
        estimate=root,
        residual=h(root),
        iterations=evals,
        bracket_used=bracket,
    )


def solve_scale_mle(d: Density, xs: Sequence[float]) -> ScoreEquationSolution:
    """Root of sum(psi_d(x_i / s)) in s > 0, the scale-family MLE."""
    xs = [float(v) for v in xs]
    if not xs:
        raise EmptySample("scale MLE needs at least one observation")
    if d.support.a >= 0.0 and min(xs) <= 0.0:
        raise OutOfSupport(
            f"scale family of {d.name} lives on the positive axis, "
            f"sample minimum is {min(xs):g}"
        )
    score = _score_of(d)

    evals = 0

    def h(s: float) -> float:
        nonlocal evals
        evals += 1
        return math.fsum(1.0 + (x / s) * score(x / s) for x in xs)

    s0 = math.sqrt(math.fsum(x * x for x in xs) / len(xs))
    if s0 == 0.0:
        raise OutOfSupport("all observations are zero; no scale is identified")
    lo, hi = 0.5 * s0, 2.0 * s0
    f_lo, f_hi = h(lo), h(hi)
    for _ in range(_MAX_EXPANSIONS):
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo < 0.0) != (f_hi < 0.0):
            break
        lo *= 0.5
        hi *= 2.0
        f_lo, f_hi = h(lo), h(hi)
    else:
        raise NoCrossing("scale score sum kept its sign over the expanded range")
    bracket = Bracket(lo, hi, f_lo, f_hi)
    root = find_root(h, bracket)
    return ScoreEquationSolution(
        estimate=root,
        residual=h(root),
        iterations=evals,
        bracket_used=bracket,
    )


def _reference_estimator(name: str) -> Callable[[Sequence[float]], float]:
    if name == "mean":
        return lambda xs: math.fsum(xs) / len(xs)
    if name == "median":
        return lambda xs: float(statistics.median(xs))
    if name == "rms":
        return lambda xs: math.sqrt(math.fsum(x * x for x in xs) / len(xs))
    raise InvalidParameter(f"unknown reference estimator {name!r}")


def verify_characterization(
    d: Density,
    kind: str,
    reference: str,
    n_trials: int,
    sample_size: int,
    seed: int,
) -> CharacterizationReport:
    """Monte Carlo gap between the score root and a reference estimator.

    Draws `n_trials` samples of `sample_size` from d (trial t uses seed
    + t, so parallel execution cannot change the result), solves the
    score equation of the requested kind, and records the largest
    absolute difference to the reference estimator.  Trials whose solver
    raises are counted in `failures` and contribute no gap.  Set
    SCOREKIT_THREADS to run trials in a thread pool.
    """
    if n_trials < 1:
        raise InvalidParameter(f"n_trials must be at least 1, got {n_trials}")
    if sample_size < 3:
        raise InvalidParameter(
            f"sample_size must be at least 3 for a characterizing sample, got {sample_size}"
        )
    if kind == "location":
        solver = solve_location_mle
    elif kind == "scale":
        solver = solve_scale_mle
    else:
        raise InvalidParameter(f"kind must be 'location' or 'scale', got {kind!r}")
    ref = _reference_estimator(reference)

    def one_trial(t: int) -> Optional[float]:
        xs = [float(v) for v in sample(d, sample_size, seed=seed + t)]
        try:
            sol = solver(d, xs)
        except ScorekitError:
            return None
        return abs(sol.estimate - ref(xs))

    workers = int(os.environ.get("SCOREKIT_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gaps = list(pool.map(one_trial, range(n_trials)))
    else:
        gaps = [one_trial(t) for t in range(n_trials)]

    failures = sum(1 for g in gaps if g is None)
    ok = [g for g in gaps if g is not None]
    return CharacterizationReport(
        n_trials=n_trials,
        sample_size=sample_size,
        max_abs_gap=max(ok) if ok else math.nan,
        seed=seed,
        failures=failures,
    )


def cauchy_additivity_check(
    score: Callable[[float], float],
    pairs: Sequence[Tuple[float, float]],
) -> float:
    """Worst violation of score(a + b) = score(a) + score(b) over pairs.

    Zero for linear scores; the size of the defect measures how far the
    density is from the family with score c * x.
    """
    worst = 0.0
    for a, b in pairs:
        worst = max(worst, abs(score(a + b) - score(a) - score(b)))
    return worst


def witness_opposite_pair(a: float, size: int = 3) -> Tuple[float, ...]:
    """Sample (a, -a, 0, ..., 0): its score equation at the mean forces
    the score to be odd."""
    if size < 3:
        raise InvalidParameter(f"witness samples need size >= 3, got {size}")
    return (a, -a) + (0.0,) * (size - 2)


def witness_zero_mean_triple(a: float, b: float) -> Tuple[float, float, float]:
    """Sample (a, b, -(a+b)) with mean zero: its score equation at the
    mean is exactly the additivity defect of (a, b) for odd scores."""
    return (a, b, -(a + b))


def witness_pair_grid(
    values: Sequence[float] = (-2.0, -1.0, 1.0, 2.0),
) -> List[Tuple[float, float]]:
    """All pairs from a value set, the canonical additivity grid."""
    return [(float(a), float(b)) for a in values for b in values]


def fit_power_relation(g: Density, p: Density) -> Tuple[float, float]:
    """Least-squares c with phi_g = c * phi_p, plus the worst residual.

    A tight fit identifies g as a power of p up to normalization.  The
    reference score phi_p must be monotone on the evaluation grid;
    strict monotonicity is the supported precondition, and a merely
    non-strict score that still changes sign is accepted with a warning.
    """
    grid = [float(z) for z in evaluation_grid(p, n=101, mass=0.99)]
    grid = [
        z
        for z in grid
        if all(abs(z - pt) > 1e-9 for pt in g.exception_points)
    ]
    score_p = _score_of(p)
    score_g = _score_of(g)
    pv = [score_p(z) for z in grid]
    ref = max(max(abs(v) for v in pv), 1.0)
    tol = 1e-9 * ref
    diffs = [b - a for a, b in zip(pv, pv[1:])]
    strict_dec = all(df < -tol for df in diffs)
    strict_inc = all(df > tol for df in diffs)
    if not (strict_dec or strict_inc):
        weak_dec = all(df <= tol for df in diffs)
        weak_inc = all(df >= -tol for df in diffs)
        crosses = min(pv) < 0.0 < max(pv)
        if (weak_dec or weak_inc) and crosses:
            warnings.warn(
                f"score of {p.name} is monotone but not strictly; "
                "fit rests on the weaker sign-change condition",
                RuntimeWarning,
                stacklevel=2,
            )
        else:
            raise NotMonotone(
                f"score of {p.name} is not monotone on the evaluation grid"
            )
    gv = [score_g(z) for z in grid]
    denom = math.fsum(v * v for v in pv)
    if denom == 0.0:
        raise NotMonotone(f"score of {p.name} vanishes on the whole grid")
    c = math.fsum(a * b for a, b in zip(gv, pv)) / denom
    max_residual = max(abs(a - c * b) for a, b in zip(gv, pv))
    return c, max_residual
