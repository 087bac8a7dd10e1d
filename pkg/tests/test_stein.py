import math

import numpy as np
import pytest

from scorekit.density import make_builtin, sample
from scorekit.errors import InvalidParameter, OutOfSupport
from scorekit.stein import (
    DEFAULT_BANK,
    OPERATOR_KINDS,
    TestFunction,
    admissible_bank,
    apply_operator,
    boundary_condition_check,
    empirical_discrepancy,
    expected_operator,
)

ALL_FAMILIES = ("normal", "exponential", "laplace", "gumbel", "student_t", "gamma", "logistic")

BANK_LABELS = [tf.label for tf in DEFAULT_BANK]


def bank_member(label):
    return DEFAULT_BANK[BANK_LABELS.index(label)]


class TestApplyOperator:
    def test_location_operator_normal(self):
        # f = x gives Af = 1 - x^2 under the standard normal
        d = make_builtin("normal")
        f = bank_member("x")
        for x in (-2.0, 0.0, 1.3):
            assert apply_operator(d, f, x) == pytest.approx(1.0 - x * x, abs=1e-12)

    def test_exponential_operators(self):
        d = make_builtin("exponential")
        f = bank_member("x")
        # unit-rate form: f' - f
        assert apply_operator(d, f, 2.0, kind="exp_unit") == pytest.approx(1.0 - 2.0, abs=1e-12)
        # scale form: x f' - (x - 1) f
        assert apply_operator(d, f, 2.0, kind="exp_scale") == pytest.approx(2.0 - 1.0 * 2.0, abs=1e-12)

    def test_exponential_kinds_need_positive_support(self):
        d = make_builtin("normal")
        with pytest.raises((InvalidParameter, OutOfSupport)):
            apply_operator(d, bank_member("x"), 1.0, kind="exp_unit")

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameter):
            apply_operator(make_builtin("normal"), bank_member("x"), 0.0, kind="scale")

    def test_kind_registry(self):
        assert OPERATOR_KINDS == ("location", "exp_unit", "exp_scale")


class TestBoundaryAndBank:
    def test_default_bank_order(self):
        assert BANK_LABELS == ["x", "x^2", "x^3", "sin", "tanh", "gauss"]

    def test_normal_admits_whole_bank(self):
        assert [tf.label for tf in admissible_bank(make_builtin("normal"))] == BANK_LABELS

    def test_exponential_drops_gauss_bump(self):
        # exp(-x^2/2) equals 1 at the support edge where p(0) = 1
        labels = [tf.label for tf in admissible_bank(make_builtin("exponential"))]
        assert labels == ["x", "x^2", "x^3", "sin", "tanh"]

    def test_student_t_drops_cubic(self):
        # x^3 * p decays like 1/x for nu = 3: too slow for the boundary check
        labels = [tf.label for tf in admissible_bank(make_builtin("student_t"))]
        assert labels == ["x", "x^2", "sin", "tanh", "gauss"]

    def test_boundary_check_agrees_with_bank(self):
        for family in ALL_FAMILIES:
            d = make_builtin(family)
            admitted = {tf.label for tf in admissible_bank(d)}
            for tf in DEFAULT_BANK:
                assert (tf.label in admitted) == boundary_condition_check(d, tf)


class TestExpectedOperator:
    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_zero_mean_over_admissible_bank(self, family):
        d = make_builtin(family)
        for tf in admissible_bank(d):
            assert abs(expected_operator(d, tf)) <= 1e-7

    def test_both_exponential_kinds_vanish(self):
        d = make_builtin("exponential")
        for tf in admissible_bank(d):
            assert abs(expected_operator(d, tf, kind="exp_unit")) <= 1e-7
            assert abs(expected_operator(d, tf, kind="exp_scale")) <= 1e-7

    def test_nonadmissible_function_has_visible_gap(self):
        # the gauss bump fails the boundary check for the exponential and its
        # operator mean picks up the boundary term
        d = make_builtin("exponential")
        gap = expected_operator(d, bank_member("gauss"))
        assert abs(gap) > 1e-3

    def test_wrong_target_gives_nonzero_mean(self):
        d = make_builtin("logistic")
        normal_like = make_builtin("normal")
        # evaluate the logistic operator under normal expectations by sampling
        xs = sample(normal_like, 4000, seed=5)
        rep = empirical_discrepancy(d, xs)
        assert rep.max_abs > 0.05


class TestEmpiricalDiscrepancy:
    def test_report_shape(self):
        d = make_builtin("normal")
        xs = sample(d, 500, seed=0)
        rep = empirical_discrepancy(d, xs)
        assert rep.target == "normal"
        assert rep.kind == "location"
        assert rep.n == 500
        assert rep.excluded == 0
        labels = [label for label, _ in rep.per_function]
        assert labels == BANK_LABELS
        assert rep.max_abs == max(abs(v) for _, v in rep.per_function)

    def test_exception_points_are_excluded(self):
        d = make_builtin("laplace")
        xs = [0.5, -1.0, 0.0, 2.0]
        rep = empirical_discrepancy(d, xs)
        assert rep.excluded == 1
        assert rep.n == 3

    def test_empty_after_exclusion(self):
        d = make_builtin("laplace")
        with pytest.raises(Exception):
            empirical_discrepancy(d, [0.0])

    def test_linearity_in_test_function(self):
        d = make_builtin("normal")
        xs = sample(d, 200, seed=9)
        f1, f2 = bank_member("x"), bank_member("tanh")
        combo = TestFunction(
            f=lambda x: 2.0 * f1.f(x) - 0.5 * f2.f(x),
            f_prime=lambda x: 2.0 * f1.f_prime(x) - 0.5 * f2.f_prime(x),
            label="combo",
        )
        rep = empirical_discrepancy(d, xs, bank=(f1, f2, combo))
        vals = dict(rep.per_function)
        assert vals["combo"] == pytest.approx(2.0 * vals["x"] - 0.5 * vals["tanh"], abs=1e-12)

    def test_statistic_shrinks_with_sample_size(self):
        """Stochastic consistency: quadrupling n should usually shrink max_abs."""
        d = make_builtin("normal")
        small, large = [], []
        for seed in range(8):
            rng = np.random.default_rng(seed)
            small.append(empirical_discrepancy(d, sample(d, 256, seed=rng)).max_abs)
            large.append(empirical_discrepancy(d, sample(d, 1024, seed=rng)).max_abs)
        wins = sum(1 for s, l in zip(small, large) if l < s)
        assert float(np.mean(large)) < float(np.mean(small))
        assert wins >= 5  # allow a noise quota out of 8 seeds

    def test_off_target_sample_is_flagged(self):
        d = make_builtin("normal")
        xs = sample(make_builtin("laplace"), 4000, seed=4)
        rep = empirical_discrepancy(d, xs)
        assert rep.max_abs > 0.3
