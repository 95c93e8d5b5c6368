"""Jarque-Bera and fitted-normal (Lilliefors) tests: calibration and power."""

import math

import numpy as np
import pytest
from scipy import stats as st

from fbfqv.errors import DegenerateInputError, ParameterError
from fbfqv.normtests import (
    MIN_N_JB,
    MIN_N_KS,
    STEPHENS_TABLE,
    jarque_bera,
    ks_fitted_normal,
    normality_tests,
    sample_moments,
)
from fbfqv.streams import substream


def test_sample_moments_hand_values():
    n, mean, var, skew, kurt = sample_moments([1.0, 2.0, 3.0, 4.0])
    assert n == 4 and mean == 2.5
    assert math.isclose(var, 5.0 / 3.0, rel_tol=1e-14)
    assert abs(skew) < 1e-14
    # uniform four-point sample: m4/m2^2 = (2*(1.5^4 + 0.5^4)/4) / (1.25)^2
    assert math.isclose(kurt, (2 * (1.5**4 + 0.5**4) / 4) / 1.25**2 - 3.0, rel_tol=1e-12)
    with pytest.raises(ParameterError):
        sample_moments([1.0])
    with pytest.raises(DegenerateInputError):
        sample_moments([2.0, 2.0, 2.0])


def test_jb_matches_scipy():
    rng = substream(1, "normtests")
    for _ in range(5):
        x = rng.standard_normal(200) + rng.random()
        mine = jarque_bera(x)
        ref_stat, ref_p = st.jarque_bera(x)
        assert math.isclose(mine.statistic, float(ref_stat), rel_tol=1e-10)
        assert math.isclose(mine.p_value, float(ref_p), rel_tol=1e-8, abs_tol=1e-12)


def test_jb_insufficient():
    r = jarque_bera(np.ones(MIN_N_JB - 1))
    assert r.status == "insufficient" and r.p_value is None
    assert not r.rejects(0.01)


def test_ks_insufficient_and_degenerate():
    r = ks_fitted_normal(np.arange(MIN_N_KS - 1, dtype=float))
    assert r.status == "insufficient"
    with pytest.raises(DegenerateInputError):
        ks_fitted_normal(np.full(50, 2.0))


def test_ks_statistic_is_lilliefors_distance():
    # D computed against the fitted normal, two-sided empirical comparison
    rng = substream(2, "normtests")
    x = rng.standard_normal(60)
    r = ks_fitted_normal(x)
    z = st.norm.cdf((np.sort(x) - np.mean(x)) / np.std(x, ddof=1))
    i = np.arange(1, 61)
    d = max(np.max(i / 60 - z), np.max(z - (i - 1) / 60))
    assert math.isclose(r.statistic, d, rel_tol=1e-12)
    t = d * (math.sqrt(60) - 0.01 + 0.85 / math.sqrt(60))
    assert math.isclose(r.details["modified_statistic"], t, rel_tol=1e-12)


def test_table_rejections_consistent_with_statistic():
    rng = substream(3, "normtests")
    x = rng.standard_normal(500)
    r = ks_fitted_normal(x)
    t = r.details["modified_statistic"]
    for crit, level in STEPHENS_TABLE:
        assert r.details["table_rejections"][str(level)] == (t > crit)
    # rejection thresholds are nested: rejecting at 5% implies 10% and 15%
    rej = r.details["table_rejections"]
    if rej["0.05"]:
        assert rej["0.1"] and rej["0.15"]


def test_calibration_on_normal_samples():
    # at the 5% Stephens row the false-rejection rate should be near 5%
    rng = substream(4, "normtests")
    reps = 400
    ks_rej = 0
    jb_rej = 0
    for _ in range(reps):
        x = rng.standard_normal(120)
        ks_rej += ks_fitted_normal(x).details["table_rejections"]["0.05"]
        jb_rej += jarque_bera(x).p_value < 0.05
    assert 0.02 <= ks_rej / reps <= 0.09
    assert 0.01 <= jb_rej / reps <= 0.09  # JB is conservative at n=120


def test_power_against_clear_alternatives():
    rng = substream(5, "normtests")
    exp_sample = rng.exponential(size=400)
    rep = normality_tests(exp_sample)
    assert rep.jb.rejects(0.01) and rep.ks.rejects(0.01)
    assert rep.any_rejection(0.01)
    t_sample = rng.standard_t(2, size=800)
    assert normality_tests(t_sample).jb.rejects(0.01)


def test_no_rejection_on_good_sample():
    rng = substream(6, "normtests")
    x = rng.standard_normal(500)
    rep = normality_tests(x)
    assert not rep.any_rejection(0.01)
    assert rep.jb.p_value > 0.01 and rep.ks.p_value > 0.01


def test_lilliefors_p_monotone_in_d():
    # larger distance must never give a larger p-value
    rng = substream(7, "normtests")
    x = rng.standard_normal(150)
    base = ks_fitted_normal(x)
    spoiled = ks_fitted_normal(np.concatenate([x, rng.exponential(size=150) * 4]))
    assert spoiled.statistic > base.statistic
    assert spoiled.p_value < base.p_value
