import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from medgeom import distributions as dist
from medgeom.errors import DomainError

# independent oracle: 40-digit bisection on mpmath's regularized incomplete beta
CRITICAL_ORACLE = {
    (60, 0.05): 4.0011913767549940961,
    (7, 0.01): 12.246383348435085339,
    (48, 0.05): 4.0426521285666549738,
    (97, 0.5): 0.45836612548473361005,
    (17, 0.1): 3.0262315614056340747,
    (10**6, 0.05): 3.8414681198431634422,
}
Z975 = 1.9599639845400542355


@pytest.mark.parametrize("key", sorted(CRITICAL_ORACLE))
def test_f_upper_critical_matches_mpmath_oracle(key):
    d2, alpha = key
    assert dist.f_upper_critical(d2, alpha) == pytest.approx(CRITICAL_ORACLE[key], rel=1e-10)


def test_f_upper_critical_tabled_value_and_chi2_limit():
    assert round(dist.f_upper_critical(60, 0.05), 4) == 4.0012
    assert dist.f_upper_critical(10**6, 0.05) == pytest.approx(Z975**2, rel=1e-5)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.1])
def test_f_upper_critical_rejects_bad_alpha(alpha):
    with pytest.raises(DomainError):
        dist.f_upper_critical(10, alpha)


def test_f_pvalue_examples():
    assert dist.f_pvalue(0.0, 12) == 1.0
    assert dist.f_pvalue(4.0012, 60) == pytest.approx(0.05, abs=1e-6)
    assert dist.f_pvalue(3.8415, 10**6) == pytest.approx(0.05, abs=1e-4)
    assert dist.f_pvalue(math.inf, 5) == 0.0
    assert math.isnan(dist.f_pvalue(math.nan, 5))
    with pytest.raises(DomainError):
        dist.f_pvalue(-1.0, 5)


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.5])
@pytest.mark.parametrize("d2", [7, 17, 47, 97])
def test_pvalue_inverts_critical(alpha, d2):
    assert dist.f_pvalue(dist.f_upper_critical(d2, alpha), d2) == pytest.approx(alpha, abs=1e-8)


@given(st.integers(1, 5000), st.floats(0, 200), st.floats(0, 200))
def test_f_pvalue_monotone(d2, s1, s2):
    lo, hi = sorted((s1, s2))
    assert dist.f_pvalue(hi, d2) <= dist.f_pvalue(lo, d2) + 1e-15


@given(st.integers(1, 100000), st.floats(0.001, 0.998))
def test_f_upper_critical_decreasing_in_alpha(d2, alpha):
    assert dist.f_upper_critical(d2, alpha) > dist.f_upper_critical(d2, alpha + 0.001)


def test_critical_converges_to_squared_normal_quantile():
    gaps = [abs(dist.f_upper_critical(d2, 0.05) - Z975**2) for d2 in (10, 100, 1000, 10**4, 10**6)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


@given(st.integers(1, 10**6), st.floats(0, 1e4))
def test_f_sf_matches_scipy(d2, stat):
    ours = dist.f_pvalue(stat, d2)
    # complement form: stats.f.sf goes through d2 / (d2 + stat), which rounds
    # towards 1 and loses digits when stat is tiny
    ref = special.betaincc(0.5, d2 / 2, stat / (d2 + stat)) if stat > 0 else 1.0
    assert ours == pytest.approx(ref, rel=1e-8, abs=1e-300)


def test_f_sf_tiny_statistic_against_mpmath():
    stat, d2 = 6.479137010843279e-13, 548
    mp.mp.dps = 40
    ref = 1 - mp.betainc(mp.mpf(1) / 2, mp.mpf(d2) / 2, 0, stat / (d2 + mp.mpf(stat)), regularized=True)
    assert dist.f_pvalue(stat, d2) == pytest.approx(float(ref), rel=1e-14)


@given(st.floats(0.05, 500), st.floats(0.05, 500), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert dist.betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-9, abs=1e-14)


def test_betainc_large_df_against_mpmath():
    mp.mp.dps = 30
    for b, x in ((5e5, 0.99999), (5e5, 0.999999), (2.5e4, 0.9999)):
        ref = float(mp.betainc(b, 0.5, 0, x, regularized=True))
        assert dist.betainc(b, 0.5, x) == pytest.approx(ref, rel=1e-11)


def test_std_normal_quantile_examples():
    assert dist.std_normal_quantile(0.975) == pytest.approx(Z975, abs=1e-12)
    assert dist.std_normal_quantile(0.5) == 0.0
    # 1 - 0.975 is not exactly 0.025 in binary, so the sum is zero to accuracy
    assert dist.std_normal_quantile(0.975) + dist.std_normal_quantile(0.025) == pytest.approx(0.0, abs=1e-12)
    assert dist.std_normal_quantile(0.75) == -dist.std_normal_quantile(0.25)
    assert dist.z_half(0.05) == pytest.approx(Z975, abs=1e-12)
    with pytest.raises(DomainError):
        dist.std_normal_quantile(1.0)


@given(st.floats(1e-12, 1 - 1e-12))
def test_std_normal_quantile_against_mpmath(prob):
    mp.mp.dps = 30
    ref = float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(prob) - 1))
    assert dist.std_normal_quantile(prob) == pytest.approx(ref, abs=1e-12, rel=1e-12)


def test_two_sided_normal_pvalue():
    assert dist.two_sided_normal_pvalue(0.0) == 1.0
    assert dist.two_sided_normal_pvalue(Z975) == pytest.approx(0.05, abs=1e-15)
    assert dist.two_sided_normal_pvalue(-Z975) == dist.two_sided_normal_pvalue(Z975)


def test_rng_stream_determinism_and_independence():
    a = dist.RngStream(7, 3).generator.standard_normal(5)
    b = dist.RngStream(7, 3).generator.standard_normal(5)
    c = dist.RngStream(7, 4).generator.standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    s1 = dist.RngStream(7, 3).substream(1).generator.standard_normal(5)
    assert not np.allclose(a, s1)


def test_inv_gamma_cdf_at_one():
    x = dist.sample_inv_gamma_1_1(dist.RngStream(11), size=10**6)
    assert np.mean(x <= 1.0) == pytest.approx(math.exp(-1.0), abs=0.002)


def test_uniform_int_support_and_endpoints():
    v = dist.sample_uniform_int(10, 100, dist.RngStream(5), size=10**5)
    assert v.min() == 10 and v.max() == 100
    assert isinstance(dist.sample_uniform_int(3, 3, dist.RngStream(1)), int)
    with pytest.raises(DomainError):
        dist.sample_uniform_int(5, 4, dist.RngStream(1))
    with pytest.raises(DomainError):
        dist.sample_uniform_real(1.0, 0.0, dist.RngStream(1))


def test_std_normal_mean():
    assert abs(np.mean(dist.sample_std_normal(dist.RngStream(9), size=10**6))) < 0.005
