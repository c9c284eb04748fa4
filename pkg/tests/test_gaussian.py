"""Tests for the standard-normal primitives and the quadrature engine.

Expected values tagged as oracle-derived are computed here with mpmath at
high working precision, through routes independent of the implementation
(arbitrary-precision quadrature of the density, bisection on that oracle
CDF), never by calling the code under test.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshcal.errors import DomainError, IntegrationError
from threshcal.gaussian import (
    SeededStream,
    integrate,
    log_cdf_power,
    log_std_normal_cdf,
    sample_standard_normal,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    std_normal_sf,
)

mpmath.mp.dps = 40


def oracle_cdf(x):
    """Phi(x) by arbitrary-precision quadrature of the density."""
    density = lambda t: mpmath.exp(-t * t / 2) / mpmath.sqrt(2 * mpmath.pi)
    return mpmath.quad(density, [-mpmath.inf, x])


def oracle_quantile(p, lo=-40, hi=40):
    """Bisection for Phi(z) = p against the quadrature oracle."""
    p = mpmath.mpf(p)
    lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if oracle_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestStdNormalCdf:
    def test_median(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_value_at_one_against_quadrature_oracle(self):
        expected = oracle_cdf(1.0)
        assert float(expected) == pytest.approx(0.8413447460685429, abs=1e-15)
        assert abs(std_normal_cdf(1.0) - float(expected)) <= 1e-14

    def test_oracle_grid(self):
        for x in [-8.0, -3.5, -1.0, -0.1, 0.3, 2.0, 5.0, 8.0]:
            assert abs(std_normal_cdf(x) - float(oracle_cdf(x))) <= 1e-14

    @given(st.floats(min_value=-40.0, max_value=40.0))
    def test_reflection(self, x):
        assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-14

    def test_monotone_on_random_grid(self):
        rng = np.random.default_rng(20240811)
        xs = np.sort(rng.uniform(-12, 12, size=4000))
        vals = [std_normal_cdf(float(x)) for x in xs]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            std_normal_cdf(float("nan"))
        with pytest.raises(DomainError):
            std_normal_cdf(float("inf"))

    def test_sf_complements_cdf(self):
        for x in [-5.0, -0.7, 0.0, 1.3, 9.0]:
            assert std_normal_sf(x) == std_normal_cdf(-x)
        # deep upper tail keeps relative accuracy instead of rounding to 0
        assert std_normal_sf(30.0) == pytest.approx(float(1 - oracle_cdf(30.0)), rel=1e-12)


class TestStdNormalQuantile:
    def test_median(self):
        assert std_normal_quantile(0.5) == 0.0

    def test_roundtrip_point(self):
        assert std_normal_quantile(std_normal_cdf(1.3)) == pytest.approx(1.3, abs=1e-10)

    def test_p975_against_bisection_oracle(self):
        expected = float(oracle_quantile(0.975))
        assert expected == pytest.approx(1.959963984540054, abs=1e-12)
        assert std_normal_quantile(0.975) == pytest.approx(expected, abs=1e-12)

    def test_probability_residual_bound(self):
        ps = [1e-300, 1e-30, 1e-12, 0.001, 0.02425, 0.3, 0.5, 0.7, 0.99, 1 - 1e-12, 1 - 1e-15]
        for p in ps:
            z = std_normal_quantile(p)
            assert abs(std_normal_cdf(z) - p) <= 1e-12

    def test_roundtrip_band(self):
        for x in np.linspace(-6, 6, 241):
            x = float(x)
            assert abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-8

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(DomainError):
            std_normal_quantile(p)


class TestLogCdfPower:
    def test_single_draw_at_median(self):
        assert log_cdf_power(0.0, 1) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_no_underflow_regime_crosscheck(self):
        assert log_cdf_power(2.0, 40) == pytest.approx(40 * math.log(std_normal_cdf(2.0)), abs=1e-12)

    def test_deep_tail_against_extended_precision(self):
        # 100 * ln Phi(-8), where Phi(-8)^100 is far below the float range
        expected = float(100 * mpmath.log(mpmath.ncdf(-8)))
        got = log_cdf_power(-8.0, 100)
        assert math.isfinite(got)
        assert got == pytest.approx(expected, rel=1e-13)

    def test_asymptotic_branch_against_extended_precision(self):
        for x in [-20.5, -25.0, -40.0, -100.0]:
            expected = float(mpmath.log(mpmath.ncdf(x)))
            assert log_std_normal_cdf(x) == pytest.approx(expected, rel=1e-13)

    def test_exp_identity_where_representable(self):
        for x in [-8.0, -3.0, -1.0, 0.0, 0.5, 2.0]:
            for n in [1, 7, 40, 1000]:
                direct = std_normal_cdf(x) ** n
                if direct >= 1e-300:
                    assert math.exp(log_cdf_power(x, n)) == pytest.approx(direct, rel=1e-10)

    def test_large_n_positive_x(self):
        # Phi(5)**1e6 is representable; the log route must match it closely
        expected = float(mpmath.ncdf(5) ** 1_000_000)
        assert math.exp(log_cdf_power(5.0, 1_000_000)) == pytest.approx(expected, rel=1e-9)

    def test_rejects_bad_n(self):
        with pytest.raises(DomainError):
            log_cdf_power(0.0, 0)
        with pytest.raises(DomainError):
            log_cdf_power(0.0, 2.5)


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: 1.0, 0.0, 1.0) == pytest.approx(1.0, rel=1e-13)

    def test_normal_density_normalization(self):
        val = integrate(std_normal_pdf, -10.0, 10.0, rel_tol=1e-12)
        assert abs(val - 1.0) <= 1e-10

    def test_polynomial(self):
        assert integrate(lambda x: x * x, 0.0, 1.0, rel_tol=1e-12) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_empty_interval(self):
        assert integrate(lambda x: 5.0, 2.0, 2.0) == 0.0

    def test_deterministic(self):
        f = lambda x: math.exp(-x) * math.sin(7 * x)
        a = integrate(f, 0.0, 20.0, rel_tol=1e-11)
        b = integrate(f, 0.0, 20.0, rel_tol=1e-11)
        assert a == b

    def test_budget_exhaustion_carries_estimate(self):
        # endpoint singularity: integrable but needs ever-deeper bisection
        with pytest.raises(IntegrationError) as exc:
            integrate(lambda x: x ** -0.5, 0.0, 1.0, rel_tol=1e-13, max_evals=400)
        assert math.isfinite(exc.value.estimate)
        assert exc.value.estimate == pytest.approx(2.0, rel=1e-2)
        assert exc.value.error_bound > 0.0

    def test_rejects_reversed_interval(self):
        with pytest.raises(DomainError):
            integrate(lambda x: 1.0, 1.0, 0.0)

    def test_rejects_non_finite_integrand(self):
        with pytest.raises(DomainError):
            integrate(lambda x: float("nan"), 0.0, 1.0)

    def test_sharp_peak_converges(self):
        # bump two orders narrower than the range, off any panel midpoint
        val = integrate(lambda x: math.exp(-0.5 * ((x - 0.37) / 0.01) ** 2), 0.0, 1.0,
                        rel_tol=1e-10)
        assert val == pytest.approx(0.01 * math.sqrt(2 * math.pi), rel=1e-9)


class TestSeededStream:
    def test_identical_streams_identical_draws(self):
        a = sample_standard_normal(SeededStream(seed=42, stream_index=3), 1000)
        b = sample_standard_normal(SeededStream(seed=42, stream_index=3), 1000)
        assert np.array_equal(a, b)

    def test_distinct_stream_indices_differ(self):
        a = sample_standard_normal(SeededStream(seed=42, stream_index=0), 1000)
        b = sample_standard_normal(SeededStream(seed=42, stream_index=1), 1000)
        assert not np.array_equal(a, b)

    def test_derived_paths_differ_from_root(self):
        s = SeededStream(seed=7, stream_index=0)
        root = s.generator().standard_normal(8)
        sub = s.generator(0).standard_normal(8)
        assert not np.array_equal(root, sub)

    def test_moments_of_large_sample(self):
        draws = sample_standard_normal(SeededStream(seed=123, stream_index=0), 10**6)
        assert abs(draws.mean()) <= 4.0 / math.sqrt(10**6)
        assert abs(draws.var() - 1.0) <= 0.01

    @pytest.mark.parametrize("seed,index", [(-1, 0), (2**64, 0), (0, -1), (1.5, 0), (0, 0.5)])
    def test_rejects_bad_addresses(self, seed, index):
        with pytest.raises(DomainError):
            SeededStream(seed=seed, stream_index=index)

    def test_rejects_bad_count(self):
        with pytest.raises(DomainError):
            sample_standard_normal(SeededStream(seed=0), 0)


@settings(max_examples=200)
@given(st.floats(min_value=-37.0, max_value=8.0), st.integers(min_value=1, max_value=10**6))
def test_log_cdf_power_is_n_linear(x, n):
    assert log_cdf_power(x, n) == pytest.approx(n * log_std_normal_cdf(x), rel=1e-15)
