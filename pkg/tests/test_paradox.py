"""Tests for the Monte Carlo harness.

Closed forms (the 1/(n+1) exchangeability law, acceptance probabilities
Phi(t/sigma)**n, the order-statistic mean integral) serve as oracles for
the simulations, and the simulations in turn cross-check the calibration
quadrature through an independent sampling route.
"""

import math

import mpmath
import numpy as np
import pytest

from threshcal.calibration import (
    SafetySpec,
    SigmaPrior,
    StandardRule,
    acceptance_probability,
    conditional_exceedance,
    threshold_schedule,
)
from threshcal.errors import ConfigurationError, DomainError, InfeasibleConditioningError
from threshcal.gaussian import SeededStream, std_normal_quantile
from threshcal.paradox import (
    EULER_GAMMA,
    DesignScenario,
    SimulationReport,
    estimate_conditional_exceedance,
    euler_gamma_partial,
    expected_max,
    expected_max_asymptotic,
    expected_max_exact,
    expected_max_monte_carlo,
    paradox_curve,
    simulate_compliance,
    simulate_minimal_effort,
)

DEMO = SafetySpec(q0=1.0, p0=0.01)
DEMO_PRIOR = SigmaPrior.log_uniform(0.01, 10.0)


def within(report, p, k=4.0):
    return abs(report.estimate - p) <= k * max(report.standard_error, 1e-12)


@pytest.fixture(scope="module")
def uncapped_rule():
    return threshold_schedule(DEMO, DEMO_PRIOR, [40, 80, 160, 320, 640],
                              cap_at_q0=False, tol=1e-6)


class TestSimulateMinimalEffort:
    def test_two_draw_symmetry(self):
        report = simulate_minimal_effort(1, 100_000, SeededStream(seed=11, stream_index=2))
        assert within(report, 0.5)
        assert report.accepted_runs == report.trials == 100_000

    def test_forty_measurements_danger_level(self):
        report = simulate_minimal_effort(40, 100_000, SeededStream(seed=12, stream_index=2))
        assert within(report, 1.0 / 41.0)

    @pytest.mark.parametrize("n", [1, 5, 40])
    def test_law_product(self, n):
        report = simulate_minimal_effort(n, 100_000, SeededStream(seed=13, stream_index=2))
        band = 4.0 * report.standard_error * (n + 1)
        assert abs(report.estimate * (n + 1) - 1.0) <= band

    def test_deterministic_and_partition_independent(self):
        stream = SeededStream(seed=99, stream_index=2)
        a = simulate_minimal_effort(40, 20_000, stream)
        b = simulate_minimal_effort(40, 20_000, stream)
        c = simulate_minimal_effort(40, 20_000, stream, workers=4)
        assert a == b == c


class TestSimulateCompliance:
    def _scenario(self, rule, n_performed, sigma, seed=5, trials=20_000):
        return DesignScenario(mode="fixed_sigma", sigma_true=sigma, rule=rule,
                              n_performed=n_performed, trials=trials,
                              stream=SeededStream(seed=seed, stream_index=3))

    def test_tiny_scale_never_rejects(self):
        rule = threshold_schedule(DEMO, DEMO_PRIOR, [40, 80])
        for kind in ("fixed_threshold", "schedule"):
            report = simulate_compliance(self._scenario(rule, 80, sigma=0.01), kind)
            assert report.estimate <= 1e-3

    def test_matches_closed_form(self, uncapped_rule):
        sigma = uncapped_rule.threshold / std_normal_quantile(0.9 ** (1 / 40))
        for n_prime in (40, 640):
            for kind in ("fixed_threshold", "schedule"):
                scenario = self._scenario(uncapped_rule, n_prime, sigma, seed=6 + n_prime)
                report = simulate_compliance(scenario, kind)
                t = uncapped_rule.threshold if kind == "fixed_threshold" \
                    else uncapped_rule.entry_for(n_prime)[1]
                expected = 1.0 - acceptance_probability(sigma, t, n_prime)
                assert within(report, expected)

    def test_fixed_rule_rejection_grows_with_count(self, uncapped_rule):
        sigma = uncapped_rule.threshold / std_normal_quantile(0.9 ** (1 / 40))
        low = simulate_compliance(self._scenario(uncapped_rule, 40, sigma, seed=21), "fixed_threshold")
        high = simulate_compliance(self._scenario(uncapped_rule, 640, sigma, seed=22), "fixed_threshold")
        gap = 4.0 * (low.standard_error + high.standard_error)
        assert high.estimate - low.estimate > gap

    def test_minimal_effort_at_required_count_always_passes(self, uncapped_rule):
        scenario = DesignScenario(mode="minimal_effort", sigma_true=1.0, rule=uncapped_rule,
                                  n_performed=40, trials=5_000,
                                  stream=SeededStream(seed=7, stream_index=3))
        report = simulate_compliance(scenario, "fixed_threshold")
        assert report.estimate == 0.0

    def test_minimal_effort_fixed_rule_matches_exchangeability(self, uncapped_rule):
        # doubling the count: extras carry the overall max half the time
        scenario = DesignScenario(mode="minimal_effort", sigma_true=1.0, rule=uncapped_rule,
                                  n_performed=80, trials=50_000,
                                  stream=SeededStream(seed=8, stream_index=3))
        report = simulate_compliance(scenario, "fixed_threshold")
        assert within(report, 0.5)

    def test_minimal_effort_schedule_rejects_less(self, uncapped_rule):
        kwargs = dict(mode="minimal_effort", sigma_true=1.0, rule=uncapped_rule,
                      n_performed=640, trials=50_000)
        fixed = simulate_compliance(
            DesignScenario(**kwargs, stream=SeededStream(seed=9, stream_index=3)),
            "fixed_threshold")
        sched = simulate_compliance(
            DesignScenario(**kwargs, stream=SeededStream(seed=10, stream_index=3)),
            "schedule")
        assert sched.estimate < fixed.estimate

    def test_rejects_bad_rule_kind(self, uncapped_rule):
        with pytest.raises(DomainError):
            simulate_compliance(self._scenario(uncapped_rule, 40, 1.0), "nearest")

    def test_scenario_validation(self, uncapped_rule):
        with pytest.raises(DomainError):
            DesignScenario(mode="fixed_sigma", sigma_true=1.0, rule=uncapped_rule,
                           n_performed=39, trials=10, stream=SeededStream(seed=0))
        with pytest.raises(DomainError):
            DesignScenario(mode="fixed_sigma", sigma_true=-1.0, rule=uncapped_rule,
                           n_performed=40, trials=10, stream=SeededStream(seed=0))


class TestParadoxCurve:
    def test_anchor_point_regimes_coincide(self, uncapped_rule):
        sigma = uncapped_rule.threshold / std_normal_quantile(0.9 ** (1 / 40))
        points = paradox_curve(DEMO, DEMO_PRIOR, sigma, uncapped_rule, [40],
                               trials=40_000, stream=SeededStream(seed=14, stream_index=4))
        assert len(points) == 1
        se = math.sqrt(0.1 * 0.9 / 40_000)
        assert abs(points[0].rejection_fixed - points[0].rejection_schedule) <= 8 * se

    def test_demo_curve_shape(self, uncapped_rule):
        sigma = uncapped_rule.threshold / std_normal_quantile(0.9 ** (1 / 40))
        points = paradox_curve(DEMO, DEMO_PRIOR, sigma, uncapped_rule,
                               [40, 160, 640], trials=20_000,
                               stream=SeededStream(seed=15, stream_index=4))
        fixed = [p.rejection_fixed for p in points]
        assert fixed[0] < fixed[1] < fixed[2]
        for p in points:
            t = uncapped_rule.entry_for(p.n_prime)[1]
            expected = 1.0 - acceptance_probability(sigma, t, p.n_prime)
            se = math.sqrt(max(expected * (1 - expected), 1e-9) / 20_000)
            assert abs(p.rejection_schedule - expected) <= 4 * se
            assert p.rejection_schedule <= p.rejection_fixed + 4 * se

    def test_rejects_counts_outside_schedule(self, uncapped_rule):
        with pytest.raises(ConfigurationError):
            paradox_curve(DEMO, DEMO_PRIOR, 0.5, uncapped_rule, [40, 1280],
                          trials=10, stream=SeededStream(seed=0))


class TestEstimateConditionalExceedance:
    def test_agrees_with_quadrature(self):
        quad_val = conditional_exceedance(DEMO, 1.0, 40, DEMO_PRIOR)
        report = estimate_conditional_exceedance(DEMO, 1.0, 40, DEMO_PRIOR,
                                                 trials=200_000,
                                                 stream=SeededStream(seed=16, stream_index=1))
        assert abs(report.estimate - quad_val) <= 3.0 * report.standard_error
        assert 0 < report.accepted_runs < report.trials

    def test_deterministic_and_partition_independent(self):
        stream = SeededStream(seed=17, stream_index=1)
        a = estimate_conditional_exceedance(DEMO, 1.0, 40, DEMO_PRIOR, 50_000, stream)
        b = estimate_conditional_exceedance(DEMO, 1.0, 40, DEMO_PRIOR, 50_000, stream,
                                            workers=4)
        assert a == b

    def test_impossible_event_raises(self):
        with pytest.raises(InfeasibleConditioningError):
            estimate_conditional_exceedance(DEMO, -10.0, 40, DEMO_PRIOR, trials=1_000,
                                            stream=SeededStream(seed=18, stream_index=1))


class TestExpectedMax:
    def test_exact_single_draw_is_zero(self):
        assert abs(expected_max_exact(1)) <= 1e-10

    def test_exact_two_draws_closed_form(self):
        assert expected_max_exact(2) == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-9)

    def test_exact_hundred_against_mpmath(self):
        mpmath.mp.dps = 25
        n = 100
        integrand = lambda x: (n * x * mpmath.npdf(x) * mpmath.ncdf(x) ** (n - 1))
        expected = float(mpmath.quad(integrand, mpmath.linspace(-10, 10, 9)))
        assert expected == pytest.approx(2.5075936364, abs=1e-9)
        assert expected_max_exact(100) == pytest.approx(expected, rel=1e-9)

    def test_asymptotic_form(self):
        assert expected_max_asymptotic(100) == pytest.approx(
            EULER_GAMMA * math.sqrt(2 * math.log(100)), rel=1e-15)
        assert expected_max_asymptotic(100) == pytest.approx(1.752, abs=5e-4)
        with pytest.raises(DomainError):
            expected_max_asymptotic(1)

    def test_asymptotic_undershoots_exact(self):
        # the shorthand sits well below the exact mean; both are reported
        assert expected_max_asymptotic(100) < expected_max_exact(100)

    def test_monte_carlo_agrees_with_exact(self):
        mean, se = expected_max_monte_carlo(10, 1.0, 40_000,
                                            SeededStream(seed=19, stream_index=5))
        assert abs(mean - expected_max_exact(10)) <= 4 * se

    def test_monte_carlo_partition_independent(self):
        stream = SeededStream(seed=20, stream_index=5)
        a = expected_max_monte_carlo(100, 2.0, 30_000, stream)
        b = expected_max_monte_carlo(100, 2.0, 30_000, stream, workers=4)
        assert a == b

    def test_growth_ratio_increasing_toward_one(self):
        ratios = [expected_max_exact(n) / math.sqrt(2 * math.log(n))
                  for n in (100, 1_000, 10_000)]
        assert ratios[0] < ratios[1] < ratios[2]
        assert all(0.8 < r < 1.0 for r in ratios)

    def test_sigma_scaling(self):
        assert expected_max_exact(50, sigma=2.5) == pytest.approx(
            2.5 * expected_max_exact(50), rel=1e-12)

    def test_dispatcher(self):
        assert expected_max(100, method="exact") == expected_max_exact(100)
        assert expected_max(100, method="asymptotic") == expected_max_asymptotic(100)
        stream = SeededStream(seed=21, stream_index=5)
        assert expected_max(10, method="monte_carlo", trials=5_000, stream=stream) == \
            expected_max_monte_carlo(10, 1.0, 5_000, stream)[0]
        with pytest.raises(DomainError):
            expected_max(10, method="monte_carlo")
        with pytest.raises(DomainError):
            expected_max(10, method="bootstrap")


class TestEulerGammaPartial:
    def test_first_term(self):
        assert euler_gamma_partial(1) == 1.0

    def test_converges_from_above(self):
        val = euler_gamma_partial(10_000)
        assert 0.0 < val - EULER_GAMMA <= 1e-4

    def test_monotone_decreasing(self):
        ns = [1, 2, 5, 10, 100, 1_000, 10_000]
        vals = [euler_gamma_partial(n) for n in ns]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestSimulationReport:
    def test_validation(self):
        with pytest.raises(DomainError):
            SimulationReport(estimate=1.5, standard_error=0.0, trials=10, accepted_runs=5)
        with pytest.raises(DomainError):
            SimulationReport(estimate=0.5, standard_error=0.0, trials=10, accepted_runs=11)
        with pytest.raises(DomainError):
            SimulationReport(estimate=0.5, standard_error=-1.0, trials=10, accepted_runs=5)
