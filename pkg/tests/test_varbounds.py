import math

import numpy as np
import pytest

from scorekit.density import (
    REAL_LINE,
    density_from_expression,
    location_score,
    make_builtin,
    score_deriv,
)
from scorekit.errors import (
    HeavyTail,
    InvalidParameter,
    NonConvergence,
    NotStrictlyLogConcave,
)
from scorekit.varbounds import (
    SmoothFunction,
    bound_report,
    cacoullos_bound,
    chernoff_bound,
    sharp_bound,
    variance_of,
)

ALL_FAMILIES = ("normal", "exponential", "laplace", "gumbel", "student_t", "gamma", "logistic")

def _sech2(x):
    if abs(x) > 350.0:
        return 0.0
    c = math.cosh(x)
    return 1.0 / (c * c)


G_LINEAR = SmoothFunction(lambda x: x, lambda x: 1.0, "x")
G_SQUARE = SmoothFunction(lambda x: x * x, lambda x: 2.0 * x, "x^2")
G_BOUNDED = SmoothFunction(lambda x: math.tanh(x), _sech2, "tanh")

# second moments worked out from the standard closed forms
KNOWN_VARIANCES = {
    "normal": 1.0,
    "exponential": 1.0,
    "laplace": 2.0,
    "gumbel": math.pi**2 / 6.0,
    "student_t": 3.0,
    "gamma": 2.0,
    "logistic": math.pi**2 / 3.0,
}


class TestVarianceOf:
    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_identity_function_variance(self, family):
        d = make_builtin(family)
        assert variance_of(d, G_LINEAR) == pytest.approx(KNOWN_VARIANCES[family], rel=1e-8)

    def test_square_function_variance(self):
        # Var[X^2] = E[X^4] - E[X^2]^2; for the normal 3 - 1 = 2
        assert variance_of(make_builtin("normal"), G_SQUARE) == pytest.approx(2.0, rel=1e-8)
        # exponential: 24 - 4; gamma(k=2): 120 - 36
        assert variance_of(make_builtin("exponential"), G_SQUARE) == pytest.approx(20.0, rel=1e-8)
        assert variance_of(make_builtin("gamma"), G_SQUARE) == pytest.approx(84.0, rel=1e-7)

    def test_divergent_moment_raises(self):
        # fourth moment of t with nu = 3 does not exist
        with pytest.raises(NonConvergence):
            variance_of(make_builtin("student_t"), G_SQUARE)


class TestChernoff:
    def test_normal_only(self):
        for family in ("exponential", "logistic", "student_t"):
            with pytest.raises(InvalidParameter):
                chernoff_bound(make_builtin(family), G_LINEAR)
        with pytest.raises(InvalidParameter):
            chernoff_bound(make_builtin("normal", sigma=2.0), G_LINEAR)

    def test_equality_for_linear_g(self):
        d = make_builtin("normal")
        var = variance_of(d, G_LINEAR)
        bound = chernoff_bound(d, G_LINEAR)
        assert var / bound == pytest.approx(1.0, abs=1e-8)

    def test_strict_for_nonlinear_g(self):
        d = make_builtin("normal")
        assert variance_of(d, G_SQUARE) < chernoff_bound(d, G_SQUARE) - 1.0

    def test_equality_attained_only_at_linear_g(self):
        """Sweep g_theta = x + theta x^2: the variance/bound ratio peaks at theta = 0."""
        d = make_builtin("normal")
        thetas = (-0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5)
        ratios = []
        for th in thetas:
            g = SmoothFunction(
                lambda x, th=th: x + th * x * x,
                lambda x, th=th: 1.0 + 2.0 * th * x,
                f"x + {th} x^2",
            )
            ratios.append(variance_of(d, g) / chernoff_bound(d, g))
        assert int(np.argmax(ratios)) == thetas.index(0.0)
        assert ratios[thetas.index(0.0)] == pytest.approx(1.0, abs=1e-8)


class TestCacoullos:
    def test_matches_chernoff_on_normal(self):
        d = make_builtin("normal")
        for g in (G_LINEAR, G_SQUARE, G_BOUNDED):
            assert abs(cacoullos_bound(d, g) - chernoff_bound(d, g)) <= 2e-8

    def test_exponential_slack(self):
        # bound 2.0 against true variance 1.0: valid but loose
        d = make_builtin("exponential")
        assert cacoullos_bound(d, G_LINEAR) == pytest.approx(2.0, abs=1e-6)
        assert variance_of(d, G_LINEAR) == pytest.approx(1.0, rel=1e-9)

    def test_heavy_tail_rejected(self):
        heavy = density_from_expression("witch", "-log(1 + x^2)", REAL_LINE, symmetric=True)
        with pytest.raises(HeavyTail):
            cacoullos_bound(heavy, G_BOUNDED)


class TestSharp:
    def test_requires_strict_log_concavity(self):
        for family in ("exponential", "laplace", "student_t"):
            with pytest.raises(NotStrictlyLogConcave):
                sharp_bound(make_builtin(family), G_LINEAR)

    @pytest.mark.parametrize("family", ["normal", "logistic", "gumbel"])
    def test_equality_at_score_function(self, family):
        """g proportional to the location score saturates the bound."""
        d = make_builtin(family)
        g = SmoothFunction(
            lambda x: location_score(d, x).phi,
            lambda x: score_deriv(d, x),
            "phi",
        )
        ratio = variance_of(d, g) / sharp_bound(d, g)
        assert 1.0 - 1e-5 <= ratio <= 1.0 + 1e-5

    def test_tightest_of_the_three_on_normal(self):
        d = make_builtin("normal")
        assert sharp_bound(d, G_BOUNDED) <= cacoullos_bound(d, G_BOUNDED) + 1e-8


class TestDominanceSweep:
    @pytest.mark.parametrize("family", ALL_FAMILIES)
    @pytest.mark.parametrize("g", [G_LINEAR, G_SQUARE, G_BOUNDED], ids=lambda g: g.label)
    def test_every_available_bound_dominates(self, family, g):
        d = make_builtin(family)
        if family == "student_t" and g.label == "x^2":
            with pytest.raises(NonConvergence):
                bound_report(d, g)
            return
        rep = bound_report(d, g)
        for name in ("chernoff", "cacoullos", "sharp"):
            bound = getattr(rep, name)
            if bound is None:
                assert name in rep.inapplicable
                continue
            assert rep.variance <= bound + 1e-6, f"{name} violated for {family}, g={g.label}"


class TestReport:
    def test_normal_report_fields(self):
        rep = bound_report(make_builtin("normal"), G_LINEAR)
        assert rep.density == "normal"
        assert rep.g_label == "x"
        assert rep.mean == pytest.approx(0.0, abs=1e-10)
        assert rep.variance == pytest.approx(1.0, rel=1e-9)
        assert set(rep.ratios) == {"chernoff", "cacoullos", "sharp"}
        assert rep.inapplicable == {}

    def test_inapplicable_reasons_are_recorded(self):
        rep = bound_report(make_builtin("exponential"), G_LINEAR)
        assert rep.chernoff is None and rep.sharp is None
        assert "chernoff" in rep.inapplicable and "sharp" in rep.inapplicable
        assert rep.cacoullos == pytest.approx(2.0, abs=1e-6)

    def test_from_expression_builds_derivative(self):
        sf = SmoothFunction.from_expression("x^3")
        assert sf.g(2.0) == 8.0
        assert sf.g_prime(2.0) == pytest.approx(12.0, rel=1e-6)
        # spot-check the indefinite-integral relation on a random interval
        from scorekit.numerics import integrate

        assert sf.g(1.7) - sf.g(-0.4) == pytest.approx(
            integrate(sf.g_prime, -0.4, 1.7), rel=1e-7
        )
