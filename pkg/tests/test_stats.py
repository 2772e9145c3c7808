import numpy as np
import pytest
from scipy import stats as scipy_stats
from scipy.special import kolmogorov as scipy_kolmogorov

from isoflow.flow.rng import BLOCK_SIZE
from isoflow.stats import (
    fit_growth_exponent,
    kolmogorov_sf,
    ks_one_sample,
    ks_two_sample,
    mc_estimate,
)


def test_mc_estimate_plain():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    est = mc_estimate(x, time=1.0, descriptor="d")
    assert est.value == 2.5
    assert est.std_error == pytest.approx(np.std(x, ddof=1) / 2.0)
    assert est.ci95 == pytest.approx((est.value - 1.96 * est.std_error,
                                      est.value + 1.96 * est.std_error))
    assert est.within(2.5, 1.0)
    assert est.rel_error(2.0) == 0.25


def test_mc_estimate_antithetic_pairs():
    m = BLOCK_SIZE
    vals = np.zeros(m)
    vals[: m // 2] = 2.0  # each pair averages to 1.0
    vals[m // 2:] = 0.0
    est = mc_estimate(vals, time=0.0, descriptor="d", antithetic=True)
    assert est.value == 1.0
    assert est.std_error == 0.0
    assert est.replications == m


def test_ci_shrinks_like_sqrt_m():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(40_000)
    se1 = mc_estimate(x[:10_000], time=0, descriptor="d").std_error
    se2 = mc_estimate(x, time=0, descriptor="d").std_error
    assert se2 == pytest.approx(se1 / 2.0, rel=0.15)


def test_control_variates_reduce_variance_keep_mean():
    rng = np.random.default_rng(7)
    w = rng.standard_normal(50_000)
    noise = rng.standard_normal(50_000)
    y = 1.5 + 2.0 * w + 0.1 * noise     # mean 1.5, mostly explained by w
    plain = mc_estimate(y, time=0, descriptor="d")
    ctrl = mc_estimate(y, time=0, descriptor="d", controls=w[:, None])
    assert ctrl.std_error < 0.1 * plain.std_error
    assert abs(ctrl.value - 1.5) < 4 * ctrl.std_error


def test_kolmogorov_sf_matches_scipy():
    for lam in (0.3, 0.5, 0.8275735551899077, 1.0, 1.5, 2.2):
        assert kolmogorov_sf(lam) == pytest.approx(float(scipy_kolmogorov(lam)), abs=1e-10)


def test_ks_two_sample_matches_scipy():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(900)
    y = rng.standard_normal(1100) * 1.1
    d, p = ks_two_sample(x, y)
    ref = scipy_stats.ks_2samp(x, y, method="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, rel=0.2, abs=0.01)


def test_ks_detects_shift_and_accepts_null():
    rng = np.random.default_rng(13)
    x = rng.standard_normal(3000)
    y = rng.standard_normal(3000)
    _, p_null = ks_two_sample(x, y)
    assert p_null > 0.01
    _, p_shift = ks_two_sample(x, y + 0.35)
    assert p_shift < 1e-6


def test_ks_one_sample():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(2000)
    from oracle_utils import normal_cdf

    _, p = ks_one_sample(x, normal_cdf)
    assert p > 0.01
    _, p_bad = ks_one_sample(x + 0.5, normal_cdf)
    assert p_bad < 1e-6


def test_growth_fit_exact_power_law():
    t = np.linspace(12, 200, 24)
    fit = fit_growth_exponent(t, 3.0 * t**1.5)
    assert fit.exponent == pytest.approx(1.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert not fit.sign_warning


def test_growth_fit_burn_in_and_signs():
    t = np.array([1.0, 2.0, 12, 20, 40, 80, 120, 160])
    h = 2.0 * t
    h[0] = -5.0  # pre-burn-in junk is discarded
    fit = fit_growth_exponent(t, h)
    assert fit.exponent == pytest.approx(1.0, abs=1e-12)
    with pytest.warns(UserWarning):
        fit2 = fit_growth_exponent(t[2:], np.array([-1.0, 2, 3, 4, 5, 6]) * 1.0)
    assert fit2.sign_warning
    with pytest.raises(ValueError):
        fit_growth_exponent([12, 20, 40], [1, 2, 3])
