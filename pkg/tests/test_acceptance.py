"""End-to-end acceptance gate.

One test per numbered criterion; each prints a single PASS/FAIL line with
the measured quantity at its stated tolerance.  Run with ``pytest -s`` to
see the lines in order.
"""

import math

import numpy as np
import pytest

import scorekit.skewsym as sk
from scorekit.cli import emit_reproduction_suite, run_reproduction_suite
from scorekit.density import (
    location_score,
    make_builtin,
    power_density,
    sample,
    scale_score,
)
from scorekit.errors import NonConvergence, NotStrictlyLogConcave
from scorekit.mle_char import (
    cauchy_additivity_check,
    fit_power_relation,
    solve_location_mle,
    verify_characterization,
    witness_pair_grid,
)
from scorekit.stein import admissible_bank, empirical_discrepancy, expected_operator
from scorekit.varbounds import (
    SmoothFunction,
    bound_report,
    cacoullos_bound,
    chernoff_bound,
    sharp_bound,
    variance_of,
)

ALL_FAMILIES = ("normal", "exponential", "laplace", "gumbel", "student_t", "gamma", "logistic")


def report(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _sech2(x):
    if abs(x) > 350.0:
        return 0.0
    c = math.cosh(x)
    return 1.0 / (c * c)


def test_01_score_identities():
    normal = make_builtin("normal")
    grid = np.linspace(-8.0, 8.0, 101)
    worst = max(abs(location_score(normal, float(x)).phi + float(x)) for x in grid)
    expo = make_builtin("exponential")
    exact = all(scale_score(expo, x).psi == 1.0 - x for x in (0.1, 0.5, 1.0, 2.5, 7.0))
    report(
        1,
        worst <= 1e-12 and exact,
        f"max |phi_normal(x) + x| = {worst:.2e} (tol 1e-12); "
        f"psi_exponential(x) == 1 - x exactly: {exact}",
    )


def test_02_stein_zero_mean_suite():
    worst = 0.0
    where = ""
    for family in ALL_FAMILIES:
        d = make_builtin(family)
        for tf in admissible_bank(d):
            gap = abs(expected_operator(d, tf))
            if gap > worst:
                worst, where = gap, f"{family}/{tf.label}"
    expo = make_builtin("exponential")
    for kind in ("exp_unit", "exp_scale"):
        for tf in admissible_bank(expo):
            gap = abs(expected_operator(expo, tf, kind=kind))
            if gap > worst:
                worst, where = gap, f"exponential[{kind}]/{tf.label}"
    report(2, worst <= 1e-7, f"max |E[Af]| = {worst:.2e} at {where} (tol 1e-7)")


def test_03_stein_discrepancy_separation():
    normal = make_builtin("normal")
    on_target = empirical_discrepancy(normal, sample(normal, 10_000, seed=42)).max_abs
    laplace_sample = sample(make_builtin("laplace"), 10_000, seed=42)
    rep = empirical_discrepancy(normal, laplace_sample)
    stat_x = dict(rep.per_function)["x"]
    ok = on_target <= 0.05 and abs(stat_x - (-1.0)) <= 0.1
    report(
        3,
        ok,
        f"on-target max_abs = {on_target:.4f} (tol 0.05); "
        f"off-target f(x)=x statistic = {stat_x:.4f} (target -1 +/- 0.1)",
    )


def test_04_variance_bound_dominance_and_collapse():
    gs = (
        SmoothFunction(lambda x: x, lambda x: 1.0, "x"),
        SmoothFunction(lambda x: x * x, lambda x: 2.0 * x, "x^2"),
        SmoothFunction(math.tanh, _sech2, "tanh"),
    )
    dominance_ok = True
    checked = 0
    for family in ALL_FAMILIES:
        d = make_builtin(family)
        for g in gs:
            if family == "student_t" and g.label == "x^2":
                continue  # fourth moment of t(3) does not exist
            rep = bound_report(d, g)
            for name in ("chernoff", "cacoullos", "sharp"):
                bound = getattr(rep, name)
                if bound is not None:
                    checked += 1
                    dominance_ok &= rep.variance <= bound + 1e-6

    normal = make_builtin("normal")
    collapse = max(abs(cacoullos_bound(normal, g) - chernoff_bound(normal, g)) for g in gs)
    linear_ratio = variance_of(normal, gs[0]) / chernoff_bound(normal, gs[0])
    expo = make_builtin("exponential")
    cac = cacoullos_bound(expo, gs[0])
    var = variance_of(expo, gs[0])
    try:
        sharp_bound(expo, gs[0])
        sharp_refused = False
    except NotStrictlyLogConcave:
        sharp_refused = True
    ok = (
        dominance_ok
        and collapse <= 2e-8
        and abs(linear_ratio - 1.0) <= 1e-8
        and abs(cac - 2.0) <= 1e-6
        and abs(var - 1.0) <= 1e-6
        and sharp_refused
    )
    report(
        4,
        ok,
        f"dominance on {checked} bounds: {dominance_ok}; normal |cacoullos - chernoff| = "
        f"{collapse:.2e} (tol 2e-8); linear ratio = {linear_ratio:.10f} (1 +/- 1e-8); "
        f"exponential cacoullos = {cac:.6f} vs variance {var:.6f}; "
        f"sharp refused on exponential: {sharp_refused}",
    )


def test_05_sharp_bound_equality_at_score():
    d = make_builtin("logistic")
    g = SmoothFunction(
        lambda x: location_score(d, x).phi,
        lambda x: -0.5 * _sech2(0.5 * x),
        "phi_logistic",
    )
    ratio = variance_of(d, g) / sharp_bound(d, g)
    report(5, 0.99999 <= ratio <= 1.00001, f"variance/sharp ratio = {ratio:.8f} (1 +/- 1e-5)")


def test_06_fisher_singularity():
    normal = make_builtin("normal")
    phi = sk.make_skewing_cdf("normal")
    sn = sk.fisher_info_at_symmetry(sk.SkewSymmetricModel(normal, phi, sk.identity_argument()))

    t5 = make_builtin("student_t", nu=5.0)
    st = sk.fisher_info_at_symmetry(sk.SkewSymmetricModel(t5, phi, sk.skew_t_argument(5.0)))

    laplace = make_builtin("laplace")
    ranks = []
    for cdf in (phi, sk.make_skewing_cdf("logistic"), sk.make_skewing_cdf("student", nu=6.0)):
        m = sk.SkewSymmetricModel(laplace, cdf, sk.location_score_argument(laplace))
        ranks.append(sk.fisher_info_at_symmetry(m).rank_at_tol)

    ok = (
        sn.min_rel_eigenvalue <= 1e-8
        and sn.rank_at_tol == 2
        and st.rank_at_tol == 3
        and st.min_rel_eigenvalue >= 1e-3
        and ranks == [2, 2, 2]
    )
    report(
        6,
        ok,
        f"skew-normal min_rel = {sn.min_rel_eigenvalue:.2e} rank {sn.rank_at_tol}; "
        f"skew-t(5) min_rel = {st.min_rel_eigenvalue:.2e} rank {st.rank_at_tol}; "
        f"laplace base-score ranks under three F = {ranks}",
    )


def test_07_scale_score_singular_pair():
    normal = make_builtin("normal")
    phi = sk.make_skewing_cdf("normal")
    q = sk.construct_singular_scale_pair(normal, 1.0, 2.0)
    pair_info = sk.fisher_info_at_symmetry(
        sk.SkewSymmetricModel(q, phi, sk.scale_score_argument(normal))
    )
    c1, c2 = pair_info.collinearity
    neg_info = sk.fisher_info_at_symmetry(
        sk.SkewSymmetricModel(make_builtin("logistic"), phi, sk.scale_score_argument(normal))
    )
    ok = (
        pair_info.rank_at_tol == 2
        and abs(c1 - 1.0) <= 0.01
        and abs(c2 - 2.0) <= 0.01
        and neg_info.rank_at_tol == 3
    )
    report(
        7,
        ok,
        f"pair rank {pair_info.rank_at_tol}, fitted (c1, c2) = ({c1:.4f}, {c2:.4f}) "
        f"(target (1, 2) +/- 0.01); negative control rank {neg_info.rank_at_tol}",
    )


def test_08_mle_characterizations():
    normal = make_builtin("normal")
    expo = make_builtin("exponential")
    loc = verify_characterization(normal, "location", "mean", n_trials=100, sample_size=5, seed=42)
    scl = verify_characterization(expo, "scale", "mean", n_trials=100, sample_size=5, seed=42)
    rms = verify_characterization(normal, "scale", "rms", n_trials=100, sample_size=5, seed=42)

    logistic = make_builtin("logistic")
    witness = (0.0, 0.0, 3.0)
    gap = abs(solve_location_mle(logistic, witness).estimate - 1.0)

    normal_defect = cauchy_additivity_check(
        lambda x: location_score(normal, x).phi, witness_pair_grid()
    )
    laplace = make_builtin("laplace")
    laplace_defect = cauchy_additivity_check(
        lambda x: location_score(laplace, x).phi, [(1.0, 1.0)]
    )
    ok = (
        loc.max_abs_gap <= 1e-9
        and scl.max_abs_gap <= 1e-9
        and rms.max_abs_gap <= 1e-9
        and gap > 0.01
        and normal_defect <= 1e-9
        and laplace_defect == 1.0
    )
    report(
        8,
        ok,
        f"normal location gap {loc.max_abs_gap:.2e}, exponential scale gap {scl.max_abs_gap:.2e}, "
        f"normal rms gap {rms.max_abs_gap:.2e} (tol 1e-9, 100 trials); logistic witness gap "
        f"{gap:.4f} (> 0.01); additivity defect {normal_defect:.2e} (normal), "
        f"{laplace_defect:.1f} (laplace pair, = 1)",
    )


def test_09_power_family_recovery():
    normal = make_builtin("normal")
    worst_rel = 0.0
    fits = []
    for c in (0.5, 1.0, 2.0, 4.0):
        fitted, _ = fit_power_relation(power_density(normal, c), normal)
        fits.append(fitted)
        worst_rel = max(worst_rel, abs(fitted - c) / c)
    report(
        9,
        worst_rel <= 1e-6,
        f"fitted c = {[f'{v:.8f}' for v in fits]} for c in (0.5, 1, 2, 4); "
        f"worst relative error {worst_rel:.2e} (tol 1e-6)",
    )


def test_10_reproduction_determinism(tmp_path):
    root = tmp_path / "repro"
    emit_reproduction_suite(str(root))
    first = run_reproduction_suite(str(root))
    second = run_reproduction_suite(str(root))
    failures = [r["name"] for r in first + second if r["failures"] or r["exit_code"] != 0]
    byte_equal = all(
        a["output_bytes"] == b["output_bytes"] for a, b in zip(first, second)
    )
    ok = not failures and byte_equal and len(first) == 24
    report(
        10,
        ok,
        f"{len(first)} cases ran twice; failures: {failures or 'none'}; "
        f"byte-identical outputs: {byte_equal}",
    )
