import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from scorekit.density import location_score, make_builtin
from scorekit.errors import (
    EmptySample,
    InvalidParameter,
    NotLogConcave,
    NotMonotone,
    OutOfSupport,
)
from scorekit.mle_char import (
    cauchy_additivity_check,
    fit_power_relation,
    solve_location_mle,
    solve_scale_mle,
    verify_characterization,
    witness_opposite_pair,
    witness_pair_grid,
    witness_zero_mean_triple,
)
from scorekit.density import power_density

NORMAL = make_builtin("normal")
LAPLACE = make_builtin("laplace")
LOGISTIC = make_builtin("logistic")

sample_values = hst.lists(
    hst.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    min_size=3,
    max_size=9,
)


class TestLocationSolver:
    def test_normal_root_is_the_mean(self):
        sol = solve_location_mle(NORMAL, (1.0, 2.0, 6.0))
        assert sol.estimate == pytest.approx(3.0, abs=1e-12)
        assert abs(sol.residual) <= 1e-9
        assert sol.nonuniqueness_interval is None

    def test_laplace_root_is_the_median(self):
        sol = solve_location_mle(LAPLACE, (0.0, 1.0, 10.0))
        assert sol.estimate == 1.0
        assert sol.nonuniqueness_interval == (1.0, 1.0)

    def test_laplace_even_sample_midpoint_and_interval(self):
        sol = solve_location_mle(LAPLACE, (10.0, 0.0, 5.0, 1.0))
        assert sol.estimate == 3.0
        assert sol.nonuniqueness_interval == (1.0, 5.0)
        assert abs(sol.residual) <= 1e-12

    def test_half_line_support_location(self):
        # gamma(k=2): the score equation sum(1/(x - m) - 1) = 0 has the root
        # derived independently by bisection
        sol = solve_location_mle(make_builtin("gamma"), (1.0, 2.0, 6.0))
        assert sol.estimate == pytest.approx(0.5318353717461253, abs=1e-9)
        assert sol.bracket_used.lo <= sol.estimate <= sol.bracket_used.hi

    def test_logistic_differs_from_mean(self):
        sol = solve_location_mle(LOGISTIC, (0.0, 0.0, 3.0))
        assert sol.estimate == pytest.approx(0.839356210330654, abs=1e-9)
        assert abs(sol.estimate - 1.0) > 0.01

    def test_rejects_bad_samples(self):
        with pytest.raises(EmptySample):
            solve_location_mle(NORMAL, ())
        with pytest.raises(NotLogConcave):
            solve_location_mle(make_builtin("student_t"), (0.0, 1.0, 2.0))

    @settings(max_examples=30, deadline=None)
    @given(xs=sample_values, k=hst.floats(min_value=-20.0, max_value=20.0, allow_nan=False))
    def test_location_equivariance(self, xs, k):
        base = solve_location_mle(NORMAL, xs).estimate
        shifted = solve_location_mle(NORMAL, [x + k for x in xs]).estimate
        assert shifted == pytest.approx(base + k, abs=1e-7 * max(1.0, abs(base + k)))

    @settings(max_examples=20, deadline=None)
    @given(xs=sample_values, k=hst.floats(min_value=-20.0, max_value=20.0, allow_nan=False))
    def test_median_equivariance(self, xs, k):
        base = solve_location_mle(LAPLACE, xs).estimate
        shifted = solve_location_mle(LAPLACE, [x + k for x in xs]).estimate
        assert shifted == pytest.approx(base + k, abs=1e-9 * max(1.0, abs(base + k)))


class TestScaleSolver:
    def test_exponential_scale_root_is_the_mean(self):
        sol = solve_scale_mle(make_builtin("exponential"), (1.0, 2.0, 6.0))
        assert sol.estimate == pytest.approx(3.0, rel=1e-10)

    def test_normal_scale_root_is_the_rms(self):
        sol = solve_scale_mle(NORMAL, (3.0, 4.0))
        assert sol.estimate == pytest.approx(math.sqrt(12.5), rel=1e-12)

    def test_positive_support_needs_positive_data(self):
        with pytest.raises(OutOfSupport):
            solve_scale_mle(make_builtin("exponential"), (-1.0, 2.0))
        with pytest.raises(OutOfSupport):
            solve_scale_mle(NORMAL, (0.0, 0.0, 0.0))

    @settings(max_examples=20, deadline=None)
    @given(
        xs=hst.lists(hst.floats(min_value=0.1, max_value=40.0), min_size=3, max_size=8),
        k=hst.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    )
    def test_scale_equivariance(self, xs, k):
        base = solve_scale_mle(make_builtin("exponential"), xs).estimate
        scaled = solve_scale_mle(make_builtin("exponential"), [k * x for x in xs]).estimate
        assert scaled == pytest.approx(k * base, rel=1e-8)


class TestCharacterizationSweeps:
    def test_normal_location_equals_mean(self):
        rep = verify_characterization(NORMAL, "location", "mean", n_trials=25, sample_size=5, seed=42)
        assert rep.failures == 0
        assert rep.max_abs_gap <= 1e-9

    def test_exponential_scale_equals_mean(self):
        rep = verify_characterization(
            make_builtin("exponential"), "scale", "mean", n_trials=25, sample_size=5, seed=42
        )
        assert rep.max_abs_gap <= 1e-9

    def test_normal_scale_equals_rms(self):
        rep = verify_characterization(NORMAL, "scale", "rms", n_trials=25, sample_size=5, seed=42)
        assert rep.max_abs_gap <= 1e-9

    def test_laplace_location_equals_median(self):
        rep = verify_characterization(LAPLACE, "location", "median", n_trials=25, sample_size=5, seed=7)
        assert rep.max_abs_gap <= 1e-9

    def test_logistic_location_is_not_the_mean(self):
        rep = verify_characterization(LOGISTIC, "location", "mean", n_trials=25, sample_size=5, seed=42)
        assert rep.max_abs_gap > 0.01

    def test_deterministic_given_seed(self):
        a = verify_characterization(NORMAL, "location", "mean", n_trials=10, sample_size=5, seed=3)
        b = verify_characterization(NORMAL, "location", "mean", n_trials=10, sample_size=5, seed=3)
        assert a.max_abs_gap == b.max_abs_gap

    def test_validates_trial_configuration(self):
        with pytest.raises(InvalidParameter):
            verify_characterization(NORMAL, "location", "mean", n_trials=0, sample_size=5, seed=1)
        with pytest.raises(InvalidParameter):
            verify_characterization(NORMAL, "location", "mean", n_trials=5, sample_size=2, seed=1)
        with pytest.raises(InvalidParameter):
            verify_characterization(NORMAL, "spread", "mean", n_trials=5, sample_size=5, seed=1)
        with pytest.raises(InvalidParameter):
            verify_characterization(NORMAL, "location", "mode", n_trials=5, sample_size=5, seed=1)


class TestAdditivity:
    def test_linear_score_has_zero_defect(self):
        assert cauchy_additivity_check(lambda x: -2.5 * x, witness_pair_grid()) == 0.0

    def test_normal_score_has_zero_defect(self):
        score = lambda x: location_score(NORMAL, x).phi
        assert cauchy_additivity_check(score, witness_pair_grid()) <= 1e-9

    def test_laplace_sign_score_fails_at_unit_pair(self):
        score = lambda x: location_score(LAPLACE, x).phi
        assert cauchy_additivity_check(score, [(1.0, 1.0)]) == pytest.approx(1.0, abs=1e-12)

    def test_logistic_defect_is_visible(self):
        score = lambda x: location_score(LOGISTIC, x).phi
        assert cauchy_additivity_check(score, witness_pair_grid()) > 0.1

    def test_witness_generators(self):
        assert witness_opposite_pair(2.0) == (2.0, -2.0, 0.0)
        assert witness_opposite_pair(1.0, size=5) == (1.0, -1.0, 0.0, 0.0, 0.0)
        triple = witness_zero_mean_triple(1.0, 2.0)
        assert triple == (1.0, 2.0, -3.0)
        assert sum(triple) == 0.0
        grid = witness_pair_grid()
        assert len(grid) == 16
        assert (-2.0, 2.0) in grid

    def test_opposite_pair_feeds_location_proof(self):
        # mean of (a, -a, 0) is 0, and the normal score equation balances there
        xs = witness_opposite_pair(3.0)
        assert solve_location_mle(NORMAL, xs).estimate == pytest.approx(0.0, abs=1e-12)


class TestPowerRelation:
    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.0])
    def test_recovers_exponent_from_normal(self, c):
        g = power_density(NORMAL, c)
        fitted, resid = fit_power_relation(g, NORMAL)
        assert fitted == pytest.approx(c, rel=1e-6)
        assert resid <= 1e-7

    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_recovers_exponent_from_laplace(self, c):
        g = power_density(LAPLACE, c)
        with pytest.warns(RuntimeWarning):
            fitted, resid = fit_power_relation(g, LAPLACE)
        assert fitted == pytest.approx(c, rel=1e-6)
        assert resid <= 1e-7

    def test_unrelated_densities_have_residual(self):
        fitted, resid = fit_power_relation(LOGISTIC, NORMAL)
        assert resid > 0.05

    def test_nonmonotone_reference_is_rejected(self):
        # the reference score must be invertible, and the t score turns around
        with pytest.raises(NotMonotone):
            fit_power_relation(NORMAL, make_builtin("student_t"))


class TestSolutionMetadata:
    def test_iterations_and_bracket_are_reported(self):
        sol = solve_location_mle(NORMAL, (1.0, 2.0, 6.0))
        assert sol.iterations > 0
        assert sol.bracket_used.lo < 3.0 < sol.bracket_used.hi

    def test_reference_median_convention(self):
        # midpoint convention for even samples, matching the solver
        xs = (4.0, 1.0, 3.0, 2.0)
        sol = solve_location_mle(LAPLACE, xs)
        assert sol.estimate == statistics.median(xs)
