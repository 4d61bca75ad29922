import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chshsim import (
    STANDARD_ANGLES,
    AngleSet,
    PairStatistics,
    RtwPairSource,
    TrialPolarizations,
    analytic_chsh,
    analytic_e,
    analytic_p_aligned,
    analytic_p_mismatched,
    estimate_p,
    mc_chsh,
    mc_e,
    mc_pair_run,
    trial_outcome,
    violation_threshold,
)
from chshsim.errors import (
    EmptyRunError,
    InsufficientDataError,
    InvalidParameterError,
)

SQRT2 = math.sqrt(2.0)

correlations = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
angles = st.floats(min_value=-360.0, max_value=360.0, allow_nan=False)


# --- analytic probabilities and estimator ----------------------------------


def test_analytic_p_aligned_values():
    assert analytic_p_aligned(0.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert analytic_p_aligned(90.0, 0.3) == pytest.approx(0.0, abs=1e-15)
    assert analytic_p_aligned(0.0, 0.0) == pytest.approx(0.25, abs=1e-15)


def test_analytic_p_mismatched_values():
    assert analytic_p_mismatched(37.0, 1.0) == 0.0
    assert analytic_p_mismatched(90.0, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert analytic_p_mismatched(45.0, 0.5) == pytest.approx(0.0625, abs=1e-15)


def test_analytic_e_values():
    assert analytic_e(0.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert analytic_e(45.0, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert analytic_e(22.5, 0.0) == pytest.approx(0.5 * math.cos(math.radians(45.0)), abs=1e-15)
    assert analytic_e(22.5, 0.0) == pytest.approx(0.35355, abs=1e-5)


@pytest.mark.parametrize(
    "func", [analytic_p_aligned, analytic_p_mismatched, analytic_e]
)
def test_analytic_functions_reject_bad_r(func):
    with pytest.raises(InvalidParameterError):
        func(10.0, 1.5)


def test_estimator_equals_probability_combination():
    # E = P_vv + P_hh - P_vh - P_hv, checked over a dense grid
    for delta10 in range(0, 181, 5):
        for r10 in range(-10, 11):
            delta, r = float(delta10), r10 / 10.0
            combo = (
                2.0 * analytic_p_aligned(delta, r)
                - 2.0 * analytic_p_mismatched(delta, r)
            )
            assert analytic_e(delta, r) == pytest.approx(combo, abs=2e-15)


# --- analytic CHSH -----------------------------------------------------------


def test_chsh_at_standard_angles_r0():
    result = analytic_chsh(STANDARD_ANGLES, 0.0)
    assert result.s_value == pytest.approx(SQRT2, abs=1e-12)
    assert result.s_value == pytest.approx(1.41421, abs=1e-5)
    assert not result.violated


def test_chsh_at_standard_angles_r1():
    result = analytic_chsh(STANDARD_ANGLES, 1.0)
    assert result.s_value == pytest.approx(SQRT2 + 1.0, abs=1e-12)
    assert result.s_value == pytest.approx(2.41421, abs=1e-5)
    assert result.violated


def test_chsh_all_zero_angles():
    result = analytic_chsh(AngleSet(0, 0, 0, 0), 0.0)
    assert result.s_value == pytest.approx(1.0, abs=1e-15)


@given(st.floats(min_value=-math.sqrt(2) / 2, max_value=1.0, allow_nan=False))
def test_headline_formula_sqrt2_plus_r(r):
    # linear branch: |sqrt(2)/2 + r| opens positively for r >= -1/sqrt(2)
    result = analytic_chsh(STANDARD_ANGLES, r)
    assert result.s_value == pytest.approx(SQRT2 + r, abs=1e-12)


@given(correlations)
def test_headline_formula_full_expression(r):
    result = analytic_chsh(STANDARD_ANGLES, r)
    expected = SQRT2 / 2.0 + abs(SQRT2 / 2.0 + r)
    assert result.s_value == pytest.approx(expected, abs=1e-12)


@given(correlations, angles, angles, angles, angles)
def test_estimator_magnitude_bound(r, a, b, c, d):
    result = analytic_chsh(AngleSet(a, b, c, d), r)
    bound = (1.0 + abs(r)) / 2.0 + 1e-12
    for e in (result.e_ab, result.e_ad, result.e_cb, result.e_cd):
        assert abs(e) <= bound


@given(correlations, st.floats(min_value=-360, max_value=360, allow_nan=False))
def test_global_rotation_invariance(r, offset):
    # exact up to trig argument reduction in the rotated evaluation
    base = analytic_chsh(STANDARD_ANGLES, r).s_value
    moved = analytic_chsh(STANDARD_ANGLES.rotated(offset), r).s_value
    assert moved == pytest.approx(base, abs=1e-9)


@settings(max_examples=200)
@given(correlations, angles, angles, angles, angles)
def test_s_never_exceeds_sqrt2_plus_abs_r(r, a, b, c, d):
    result = analytic_chsh(AngleSet(a, b, c, d), r)
    assert result.s_value <= SQRT2 + abs(r) + 1e-9


def test_result_consistency():
    result = analytic_chsh(AngleSet(3, 77, 191, 12), 0.4)
    assert result.s_value == abs(result.e_ab - result.e_ad) + abs(
        result.e_cb + result.e_cd
    )
    assert result.mode == "analytic"
    assert result.std_err == 0.0


def test_angle_set_rejects_non_finite():
    with pytest.raises(InvalidParameterError):
        AngleSet(0.0, float("inf"), 0.0, 0.0)


def test_angle_set_normalizes_to_circle():
    assert AngleSet(-30.0, 370.0, 360.0, 0.0).as_tuple() == (330.0, 10.0, 0.0, 0.0)


def test_s_bound_over_dense_random_sample():
    import numpy as np

    rng = np.random.default_rng(424242)
    for _ in range(2000):
        a, b, c, d = rng.uniform(0.0, 360.0, size=4)
        r = rng.uniform(-1.0, 1.0)
        s = analytic_chsh(AngleSet(a, b, c, d), r).s_value
        assert s <= SQRT2 + abs(r) + 1e-9


def test_pair_statistics_field_invariants():
    stats = mc_pair_run(RtwPairSource(0.3, seed=93), 25.0, 70.0, 5000)
    assert sum(stats.trial_counts.values()) == stats.total_trials == 5000
    for label, total in stats.intensity_sums.items():
        assert 0.0 <= total <= 0.5 * stats.trial_counts[label] + 1e-9
    e, _ = mc_e(stats)
    assert e == stats.sum_scores / stats.total_trials
    assert stats.sum_sq_scores >= 0.0


# --- Monte Carlo: pair runs and estimators ----------------------------------


def oracle_expected_p(delta_deg, r):
    """Brute-force enumeration of the four sign outcomes.

    Each outcome has exact probability (1+r)/4 (matching signs) or (1-r)/4
    (opposite); the empirical P carries a factor 2 on the mean per-trial
    intensity.
    """
    expected = {}
    for s1, s2 in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
        pr = (1.0 + r) / 4.0 if s1 == s2 else (1.0 - r) / 4.0
        out = trial_outcome(TrialPolarizations.from_signs(s1, s2), delta_deg, 0.0)
        expected[out.label] = 2.0 * pr * out.intensity
    return expected


def test_oracle_matches_analytic_forms():
    for delta in (0.0, 22.5, 45.0, 90.0):
        for r in (-0.8, 0.0, 0.5, 1.0):
            exp = oracle_expected_p(delta, r)
            assert exp["VV"] == pytest.approx(analytic_p_aligned(delta, r), abs=1e-14)
            assert exp["HH"] == pytest.approx(analytic_p_aligned(delta, r), abs=1e-14)
            assert exp["VH"] == pytest.approx(analytic_p_mismatched(delta, r), abs=1e-14)
            assert exp["HV"] == pytest.approx(analytic_p_mismatched(delta, r), abs=1e-14)


def test_pair_run_trivial_label_exclusions():
    stats = mc_pair_run(RtwPairSource(1.0, seed=5), 10.0, 40.0, 1000)
    assert stats.n_vh == 0 and stats.n_hv == 0
    assert stats.total_trials == 1000
    stats = mc_pair_run(RtwPairSource(-1.0, seed=5), 10.0, 40.0, 1000)
    assert stats.n_vv == 0 and stats.n_hh == 0


def test_pair_run_rejects_empty():
    with pytest.raises(EmptyRunError):
        mc_pair_run(RtwPairSource(0.5, seed=1), 0.0, 0.0, 0)


def test_estimated_p_vv_converges_to_analytic():
    # aligned-probability law at delta = 22.5, r = 0.8
    n = 1_000_000
    stats = mc_pair_run(RtwPairSource(0.8, seed=23), 22.5, 0.0, n)
    p_vv, p_hh, p_vh, p_hv = estimate_p(stats)
    expected = analytic_p_aligned(22.5, 0.8)
    p_label = stats.n_vv / n
    se = 2.0 * stats.label_intensities["VV"] * math.sqrt(p_label * (1 - p_label) / n)
    assert abs(p_vv - expected) <= 5 * se


def test_estimate_p_perfect_correlation_zero_delta():
    stats = mc_pair_run(RtwPairSource(1.0, seed=3), 0.0, 0.0, 2000)
    p_vv, p_hh, p_vh, p_hv = estimate_p(stats)
    assert p_vh == 0.0 and p_hv == 0.0
    # P_vv + P_hh -> cos^2(0)(1+1)/2 = 1, split between the two labels
    assert p_vv + p_hh == pytest.approx(1.0, abs=1e-12)
    n = stats.total_trials
    se = math.sqrt(0.25 / n)  # binomial split of aligned trials
    assert abs(p_vv - 0.5) <= 5 * se


def test_estimate_p_uncorrelated_at_45_degrees():
    # every label converges to (1/4) cos^2 45 = 0.125 (enumeration oracle)
    n = 100_000
    stats = mc_pair_run(RtwPairSource(0.0, seed=29), 45.0, 0.0, n)
    expected = oracle_expected_p(45.0, 0.0)
    ps = dict(zip(("VV", "HH", "VH", "HV"), estimate_p(stats)))
    for label in ("VV", "HH", "VH", "HV"):
        assert expected[label] == pytest.approx(0.125, abs=1e-12)
        p_label = stats.trial_counts[label] / n
        se = 2.0 * stats.label_intensities[label] * math.sqrt(p_label * (1 - p_label) / n)
        assert abs(ps[label] - expected[label]) <= 5 * se


def test_estimate_p_mismatched_vanish_at_zero_delta():
    stats = mc_pair_run(RtwPairSource(0.0, seed=31), 15.0, 15.0, 10_000)
    _, _, p_vh, p_hv = estimate_p(stats)
    assert p_vh == pytest.approx(0.0, abs=1e-30)
    assert p_hv == pytest.approx(0.0, abs=1e-30)


def test_estimate_p_empty_stats_rejected():
    empty = PairStatistics(0.0, 0.0, 0, 0, 0, 0)
    with pytest.raises(EmptyRunError):
        estimate_p(empty)


def test_mc_e_deterministic_case():
    # r = 1 and zero relative angle score exactly 1 on every trial
    stats = mc_pair_run(RtwPairSource(1.0, seed=37), 0.0, 0.0, 5000)
    e, se = mc_e(stats)
    assert e == 1.0
    assert se == 0.0


def test_mc_e_zero_expectation():
    stats = mc_pair_run(RtwPairSource(0.0, seed=41), 45.0, 0.0, 1_000_000)
    e, se = mc_e(stats)
    assert abs(e) <= 5 * se


def test_mc_e_matches_analytic():
    stats = mc_pair_run(RtwPairSource(0.8, seed=43), 22.5, 0.0, 1_000_000)
    e, se = mc_e(stats)
    expected = analytic_e(22.5, 0.8)
    assert expected == pytest.approx(0.75355, abs=1e-5)
    assert abs(e - expected) <= 5 * se


def test_mc_e_needs_two_trials():
    stats = mc_pair_run(RtwPairSource(0.5, seed=1), 0.0, 0.0, 1)
    with pytest.raises(InsufficientDataError):
        mc_e(stats)


def test_mc_matches_analytic_over_grid():
    # coarse (delta, r) grid at N = 1e5: every deviation within 5 SE
    n = 100_000
    seed = 1000
    for delta in (0.0, 30.0, 60.0, 90.0, 135.0):
        for r in (-0.9, -0.5, 0.0, 0.5, 0.9):
            stats = mc_pair_run(RtwPairSource(r, seed=seed), delta, 0.0, n)
            seed += 1
            e, se = mc_e(stats)
            assert abs(e - analytic_e(delta, r)) <= 5 * se, (delta, r)


def test_pair_statistics_merge():
    a = mc_pair_run(RtwPairSource(0.5, seed=51), 30.0, 0.0, 1000)
    b = mc_pair_run(RtwPairSource(0.5, seed=52), 30.0, 0.0, 500)
    merged = a + b
    assert merged.total_trials == 1500
    assert merged.n_vv == a.n_vv + b.n_vv
    with pytest.raises(InvalidParameterError):
        a + mc_pair_run(RtwPairSource(0.5, seed=53), 31.0, 0.0, 10)


# --- Monte Carlo: full CHSH ---------------------------------------------------


def test_mc_chsh_uncorrelated():
    result = mc_chsh(0.0, STANDARD_ANGLES, 100_000, seed=61)
    assert result.mode == "monte_carlo"
    assert abs(result.s_value - SQRT2) <= 5 * result.std_err
    assert not result.violated


def test_mc_chsh_perfect_correlation_is_exact():
    # all trials aligned: scores are angle constants, so the only spread
    # left is float representation noise in the mean
    result = mc_chsh(1.0, STANDARD_ANGLES, 10_000, seed=67)
    assert result.std_err <= 1e-15
    assert result.s_value == pytest.approx(SQRT2 + 1.0, abs=1e-12)
    assert result.violated


def test_mc_chsh_run_sizes():
    with pytest.raises(EmptyRunError):
        mc_chsh(0.5, STANDARD_ANGLES, 0, seed=1)
    with pytest.raises(InsufficientDataError):
        mc_chsh(0.5, STANDARD_ANGLES, 1, seed=1)


def test_mc_chsh_deterministic_given_seed():
    a = mc_chsh(0.7, STANDARD_ANGLES, 50_000, seed=71)
    b = mc_chsh(0.7, STANDARD_ANGLES, 50_000, seed=71)
    assert a.s_value == b.s_value
    assert a.pair_stats == b.pair_stats


def test_mc_chsh_gaussian_source():
    result = mc_chsh(0.5, STANDARD_ANGLES, 200_000, seed=73, source="gaussian")
    # calibration tolerance (1e-3) plus sampling noise
    assert abs(result.s_value - (SQRT2 + 0.5)) <= 1e-3 + 5 * result.std_err


def test_mc_chsh_std_err_is_root_sum_square():
    result = mc_chsh(0.4, STANDARD_ANGLES, 20_000, seed=79)
    assert result.std_err == pytest.approx(
        math.sqrt(sum(se**2 for se in result.e_std_errs)), rel=1e-12
    )


# --- violation threshold -------------------------------------------------------


def test_threshold_standard_angles():
    r_star = violation_threshold(STANDARD_ANGLES)
    assert r_star == pytest.approx(2.0 - SQRT2, abs=1e-9)


def test_threshold_all_zero_angles():
    assert violation_threshold(AngleSet(0, 0, 0, 0)) == pytest.approx(1.0, abs=1e-9)


def test_threshold_absent_when_only_anticorrelation_violates():
    # S = 1 - r stays at or below 2, touching it only at r = -1
    assert violation_threshold(AngleSet(0, 0, 90, 0)) is None


def test_threshold_crossing_is_exact():
    rng_angles = [
        AngleSet(0, 22.5, 45, 67.5),
        AngleSet(10, 40, 60, 100),
        AngleSet(5, 20, 50, 80),
        AngleSet(0, 30, 45, 60),
    ]
    for aset in rng_angles:
        r_star = violation_threshold(aset)
        if r_star is None:
            assert analytic_chsh(aset, 1.0).s_value <= 2.0 + 1e-10
        else:
            assert abs(analytic_chsh(aset, r_star).s_value - 2.0) <= 1e-10


def test_threshold_marks_violation_region():
    r_star = violation_threshold(STANDARD_ANGLES)
    assert analytic_chsh(STANDARD_ANGLES, r_star + 1e-6).violated
    assert not analytic_chsh(STANDARD_ANGLES, r_star - 1e-6).violated
