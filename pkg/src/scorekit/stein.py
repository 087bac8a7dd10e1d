"""Stein-type operators built from density scores.

For a target density p the location-form operator maps a smooth test
function f to ``f' + phi_p * f``; its expectation under p is zero whenever
``f * p`` vanishes at both support endpoints.  On the positive half line
the unit exponential admits two further characterising operators,
``f' - f`` and ``x f' - (x - 1) f``.  The empirical average of an operator
over a sample is a cheap goodness-of-fit statistic: near zero when the
sample comes from the target, drifting to the population gap otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

from .density import Density, integrate_density, location_score
from .errors import EmptySample, InvalidParameter
from .numerics import QuadratureSpec, central_diff

__all__ = [
    "TestFunction",
    "OPERATOR_KINDS",
    "SteinDiscrepancyReport",
    "DEFAULT_BANK",
    "apply_operator",
    "boundary_condition_check",
    "admissible_bank",
    "expected_operator",
    "empirical_discrepancy",
]

OPERATOR_KINDS = ("location", "exp_unit", "exp_scale")


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # not a pytest class, despite the name

    f: Callable[[float], float]
    f_prime: Callable[[float], float]
    label: str

    @classmethod
    def from_callable(cls, f: Callable[[float], float], label: str) -> "TestFunction":
        """Wrap f with a finite-difference derivative."""
        return cls(f=f, f_prime=lambda x: central_diff(f, x, order=1), label=label)


@dataclass(frozen=True)
class SteinDiscrepancyReport:
    """Empirical operator means per test function.

    ``excluded`` counts sample points dropped because they fall outside
    the target support (or on a registered score singularity).
    """

    target: str
    kind: str
    n: int
    excluded: int
    per_function: Tuple[Tuple[str, float], ...]
    max_abs: float


def _sech2(x: float) -> float:
    t = math.exp(-abs(x))
    s = 2.0 * t / (1.0 + t * t)
    return s * s


DEFAULT_BANK: Tuple[TestFunction, ...] = (
    TestFunction(lambda x: x, lambda x: 1.0, "x"),
    TestFunction(lambda x: x * x, lambda x: 2.0 * x, "x^2"),
    TestFunction(lambda x: x**3, lambda x: 3.0 * x * x, "x^3"),
    TestFunction(math.sin, math.cos, "sin"),
    TestFunction(math.tanh, _sech2, "tanh"),
    TestFunction(
        lambda x: math.exp(-0.5 * x * x),
        lambda x: -x * math.exp(-0.5 * x * x),
        "gauss",
    ),
)


def _check_kind(d: Density, kind: str) -> None:
    if kind not in OPERATOR_KINDS:
        raise InvalidParameter(f"kind must be one of {OPERATOR_KINDS}, got {kind!r}")
    if kind != "location" and not d.support.is_positive_half_line:
        raise InvalidParameter(
            f"{kind} operator needs a positive-support target, {d.name} has "
            f"support ({d.support.a}, {d.support.b})"
        )


def apply_operator(d: Density, tf: TestFunction, x: float, kind: str = "location") -> float:
    """Evaluate the chosen operator applied to tf at the point x."""
    _check_kind(d, kind)
    if kind == "location":
        phi = location_score(d, x).phi
        return tf.f_prime(x) + phi * tf.f(x)
    if kind == "exp_unit":
        return tf.f_prime(x) - tf.f(x)
    return x * tf.f_prime(x) - (x - 1.0) * tf.f(x)


def _pdf_times_f(d: Density, tf: TestFunction, x: float) -> float:
    lp = d.log_pdf(x)
    p = math.exp(lp) if lp > -745.0 else 0.0
    return tf.f(x) * p


def boundary_condition_check(d: Density, tf: TestFunction, tol: float = 1e-8) -> bool:
    """Does f * p vanish at both support endpoints?

    Each endpoint is approached along a geometric sequence; the limit is
    taken as met when the trailing values stay below ``tol``.
    """
    for endpoint, side in ((d.support.a, +1.0), (d.support.b, -1.0)):
        tail: list[float] = []
        if math.isinf(endpoint):
            for k in range(3, 31):
                x = side * -(2.0**k)  # side=+1 -> a=-inf -> x negative
                tail.append(abs(_pdf_times_f(d, tf, x)))
                if len(tail) >= 2 and tail[-1] == 0.0 and tail[-2] == 0.0:
                    break
        else:
            for k in range(10, 41):
                x = endpoint + side * 2.0**-k
                tail.append(abs(_pdf_times_f(d, tf, x)))
        if max(tail[-3:]) > tol:
            return False
    return True


def admissible_bank(
    d: Density, bank: Sequence[TestFunction] = DEFAULT_BANK, tol: float = 1e-8
) -> Tuple[TestFunction, ...]:
    """The subset of the bank passing the boundary condition for d."""
    return tuple(tf for tf in bank if boundary_condition_check(d, tf, tol))


def expected_operator(
    d: Density,
    tf: TestFunction,
    kind: str = "location",
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """E[(A f)(X)] under the target; zero for boundary-passing f."""
    _check_kind(d, kind)
    if kind == "location":
        if d.analytic_score is not None:
            score = d.analytic_score
        else:
            score = lambda x: central_diff(d.log_pdf, x, order=1)
        integrand = lambda x: tf.f_prime(x) + score(x) * tf.f(x)
    elif kind == "exp_unit":
        integrand = lambda x: tf.f_prime(x) - tf.f(x)
    else:
        integrand = lambda x: x * tf.f_prime(x) - (x - 1.0) * tf.f(x)
    return integrate_density(d, integrand, spec)


def empirical_discrepancy(
    d: Density,
    xs: Sequence[float],
    kind: str = "location",
    bank: Optional[Sequence[TestFunction]] = None,
) -> SteinDiscrepancyReport:
    """Per-function empirical operator means over a sample.

    Points outside the support (or sitting exactly on a score
    singularity) are excluded from the averages but counted in
    ``excluded``.  Sums are compensated, so the result does not depend on
    sample ordering.
    """
    _check_kind(d, kind)
    if bank is None:
        bank = admissible_bank(d)
    usable = [
        float(x)
        for x in xs
        if d.support.contains(float(x))
        and all(abs(float(x) - pt) > 1e-12 * max(1.0, abs(pt)) for pt in d.exception_points)
    ]
    excluded = len(xs) - len(usable)
    if not usable:
        raise EmptySample(f"no usable points among {len(xs)} for target {d.name}")
    per = []
    for tf in bank:
        total = math.fsum(apply_operator(d, tf, x, kind) for x in usable)
        per.append((tf.label, total / len(usable)))
    return SteinDiscrepancyReport(
        target=d.name,
        kind=kind,
        n=len(usable),
        excluded=excluded,
        per_function=tuple(per),
        max_abs=max(abs(v) for _, v in per),
    )
