"""Seeded Monte Carlo demonstrations of the over-measurement effect.

The simulations here are the empirical counterpart of the calibration
module: they reproduce the 1/(n+1) exceedance law for a minimal-effort
designer, show how rejection rates climb with extra measurements under a
fixed test threshold, and cross-check the conditional-exceedance integrals
by rejection sampling.

Every simulation is partitioned into fixed-size blocks.  Block b draws from
the substream stream.generator(b) and reduces to integer counts or
correctly-rounded (math.fsum) partial sums, so the combined result is
bit-identical for a fixed seed no matter how many workers computed the
blocks or in which order they finished.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .calibration import SafetySpec, SigmaPrior, StandardRule
from .errors import ConfigurationError, DomainError, InfeasibleConditioningError
from .gaussian import (
    SeededStream,
    _require_count,
    _require_finite,
    integrate,
    log_std_normal_cdf,
    std_normal_pdf,
)

# Euler-Mascheroni constant, the limit of euler_gamma_partial.
EULER_GAMMA = 0.5772156649015329

# Block sizing targets about 32 MB of draws per block.
_BLOCK_TARGET_FLOATS = 1 << 22

_MODES = ("fixed_sigma", "minimal_effort")
_RULE_KINDS = ("fixed_threshold", "schedule")
_EXPECTED_MAX_METHODS = ("asymptotic", "exact", "monte_carlo")


@dataclass(frozen=True)
class DesignScenario:
    """A designer being tested under a standard.

    fixed_sigma draws every sample at the true scale sigma_true.
    minimal_effort models a designer who relaxes mitigation until the
    maximum of the required first n_required measurements sits exactly on
    the standard's base threshold (sigma_true is ignored).
    """

    mode: str
    sigma_true: float
    rule: StandardRule
    n_performed: int
    trials: int
    stream: SeededStream

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        _require_finite("sigma_true", self.sigma_true)
        if self.sigma_true <= 0.0:
            raise DomainError(f"sigma_true must be positive, got {self.sigma_true}")
        _require_count("n_performed", self.n_performed)
        _require_count("trials", self.trials)
        if self.n_performed < self.rule.n_required:
            raise DomainError(
                f"n_performed = {self.n_performed} is below the required count "
                f"{self.rule.n_required}")


@dataclass(frozen=True)
class SimulationReport:
    """A binomial Monte Carlo estimate with its uncertainty."""

    estimate: float
    standard_error: float
    trials: int
    accepted_runs: int

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise DomainError(f"estimate must be a probability, got {self.estimate}")
        if self.standard_error < 0.0:
            raise DomainError("standard_error must be >= 0")
        _require_count("trials", self.trials)
        if not 0 <= self.accepted_runs <= self.trials:
            raise DomainError(
                f"accepted_runs must lie in [0, trials], got {self.accepted_runs}")


@dataclass(frozen=True)
class ParadoxPoint:
    """One measurement count with its rejection rate under both rule readings."""

    n_prime: int
    rejection_fixed: float
    rejection_schedule: float


def _binomial_report(successes: int, trials: int, accepted_runs: int) -> SimulationReport:
    est = successes / trials
    se = math.sqrt(est * (1.0 - est) / trials)
    return SimulationReport(estimate=est, standard_error=se,
                            trials=trials, accepted_runs=accepted_runs)


def _block_plan(trials: int, draws_per_trial: int) -> list[int]:
    block = max(256, _BLOCK_TARGET_FLOATS // max(1, draws_per_trial))
    sizes = []
    remaining = trials
    while remaining > 0:
        take = min(block, remaining)
        sizes.append(take)
        remaining -= take
    return sizes


def _map_blocks(stream: SeededStream, trials: int, draws_per_trial: int,
                block_fn: Callable[[np.random.Generator, int], tuple],
                workers: int = 1) -> list[tuple]:
    """Run block_fn over the fixed block plan, in block-index order.

    Block b always sees the generator stream.generator(b) and the same
    trial count, so the list of per-block results does not depend on the
    worker count.
    """
    workers = _require_count("workers", workers)
    sizes = _block_plan(trials, draws_per_trial)

    def run(task):
        idx, size = task
        return block_fn(stream.generator(idx), size)

    tasks = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def simulate_minimal_effort(n: int, trials: int, stream: SeededStream,
                            workers: int = 1) -> SimulationReport:
    """Exceedance frequency for the minimal-effort designer.

    Each trial draws n variates, rescales the whole sample so its maximum
    sits exactly on the test threshold, then draws one further variate at
    the same scale and records whether it crosses the threshold.  Rescaling
    by a positive factor preserves order, so the event reduces to "the
    extra raw draw exceeds the raw sample maximum" and the threshold value
    drops out; the expected frequency is the exchangeability law 1/(n+1).
    """
    n = _require_count("n", n)
    trials = _require_count("trials", trials)

    def block(gen, size):
        z = gen.standard_normal((size, n + 1))
        return (int((z[:, n] > z[:, :n].max(axis=1)).sum()),)

    parts = _map_blocks(stream, trials, n + 1, block, workers)
    exceed = sum(p[0] for p in parts)
    return _binomial_report(exceed, trials, accepted_runs=trials)


def simulate_compliance(scenario: DesignScenario, rule_kind: str,
                        workers: int = 1) -> SimulationReport:
    """Rejection frequency of a designer tested under a standard.

    rule_kind "fixed_threshold" applies the base threshold t(n_required)
    no matter how many measurements were actually taken (the naive reading
    of a published standard); "schedule" applies the entry for the
    performed count.  accepted_runs counts the safe verdicts.
    """
    if rule_kind not in _RULE_KINDS:
        raise DomainError(f"rule_kind must be one of {_RULE_KINDS}, got {rule_kind!r}")
    rule = scenario.rule
    if rule_kind == "fixed_threshold":
        applied_t = rule.threshold
    else:
        _, applied_t = rule.entry_for(scenario.n_performed)

    if scenario.mode == "fixed_sigma":
        sigma = scenario.sigma_true

        def block(gen, size):
            z = gen.standard_normal((size, scenario.n_performed))
            return (int((z.max(axis=1) * sigma > applied_t).sum()),)

    else:
        n_req = rule.n_required
        if rule.threshold <= 0.0:
            raise ConfigurationError(
                "minimal_effort mode needs a positive base threshold to pin the "
                f"observed maximum to, got {rule.threshold}")
        # Pinning max of the first n_req draws at the base threshold and
        # testing the rest against applied_t is scale-free: reject exactly
        # when max(extras) > max(first n_req) * (applied_t / base_t).
        ratio = applied_t / rule.threshold

        def block(gen, size):
            if scenario.n_performed == n_req:
                return (0,)
            z = gen.standard_normal((size, scenario.n_performed))
            m_req = z[:, :n_req].max(axis=1)
            m_extra = z[:, n_req:].max(axis=1)
            return (int((m_extra > m_req * ratio).sum()),)

    parts = _map_blocks(scenario.stream, scenario.trials, scenario.n_performed,
                        block, workers)
    rejected = sum(p[0] for p in parts)
    return _binomial_report(rejected, scenario.trials,
                            accepted_runs=scenario.trials - rejected)


def paradox_curve(spec: SafetySpec, prior: SigmaPrior, sigma_true: float,
                  rule: StandardRule, n_list: Sequence[int], trials: int,
                  stream: SeededStream, workers: int = 1) -> list[ParadoxPoint]:
    """Rejection rates against measurement count, under both rule readings.

    One pair of compliance simulations per count: the fixed-threshold rate
    climbs with n' (more chances to cross the same bar) while the schedule
    rate follows the count-matched threshold.  spec and prior record the
    calibration context the rule came from; they are not re-derived here.

    Row r draws from stream.child(r, 0) for the fixed reading and
    stream.child(r, 1) for the schedule reading.
    """
    _require_finite("sigma_true", sigma_true)
    if not n_list:
        raise DomainError("n_list must not be empty")
    counts = [_require_count("n'", n) for n in n_list]
    if any(a >= b for a, b in zip(counts, counts[1:])):
        raise DomainError(f"n_list must be strictly increasing, got {list(n_list)}")
    max_tabulated = rule.schedule[-1][0]
    for n_prime in counts:
        if not rule.n_required <= n_prime <= max_tabulated:
            raise ConfigurationError(
                f"n' = {n_prime} outside the schedule's tabulated range "
                f"[{rule.n_required}, {max_tabulated}]")

    points = []
    for row, n_prime in enumerate(counts):
        base = DesignScenario(mode="fixed_sigma", sigma_true=sigma_true, rule=rule,
                              n_performed=n_prime, trials=trials,
                              stream=stream.child(row, 0))
        fixed = simulate_compliance(base, "fixed_threshold", workers=workers)
        sched = simulate_compliance(replace(base, stream=stream.child(row, 1)),
                                    "schedule", workers=workers)
        points.append(ParadoxPoint(n_prime=n_prime,
                                   rejection_fixed=fixed.estimate,
                                   rejection_schedule=sched.estimate))
    return points


def estimate_conditional_exceedance(spec: SafetySpec, threshold: float, n: int,
                                    prior: SigmaPrior, trials: int,
                                    stream: SeededStream,
                                    workers: int = 1) -> SimulationReport:
    """Rejection-sampling estimate of the conditional exceedance.

    Draw a scale from the prior, draw n variates at that scale, keep the
    run when its maximum stays within the threshold, and report the
    fraction of kept runs whose one further draw exceeds q0.  This is the
    sampling counterpart of conditional_exceedance and shares no code with
    its quadrature; the standard error is binomial over the kept runs.
    """
    threshold = _require_finite("threshold", threshold)
    n = _require_count("n", n)
    trials = _require_count("trials", trials)

    def block(gen, size):
        sigma = prior.sample(gen, size)
        z = gen.standard_normal((size, n + 1))
        accepted = z[:, :n].max(axis=1) * sigma <= threshold
        exceed = (z[:, n] * sigma > spec.q0) & accepted
        return int(accepted.sum()), int(exceed.sum())

    parts = _map_blocks(stream, trials, n + 1, block, workers)
    kept = sum(p[0] for p in parts)
    exceed = sum(p[1] for p in parts)
    if kept == 0:
        raise InfeasibleConditioningError(
            f"no accepted runs in {trials} trials: the event max <= {threshold} "
            f"with n = {n} is effectively impossible under the prior")
    est = exceed / kept
    se = math.sqrt(est * (1.0 - est) / kept)
    return SimulationReport(estimate=est, standard_error=se,
                            trials=trials, accepted_runs=kept)


def expected_max_asymptotic(n: int, sigma: float = 1.0) -> float:
    """The gamma-prefactor growth shorthand: EULER_GAMMA * sqrt(2 ln n) * sigma.

    Kept exactly in this form for side-by-side comparison; the exact mean
    grows like sqrt(2 ln n) alone, so this shorthand undershoots it (see
    expected_max_exact for the reference values).
    """
    n = _require_count("n", n)
    if n < 2:
        raise DomainError("the asymptotic form needs n >= 2 (ln n must be positive)")
    sigma = _positive_sigma(sigma)
    return EULER_GAMMA * math.sqrt(2.0 * math.log(n)) * sigma


def expected_max_exact(n: int, sigma: float = 1.0, rel_tol: float = 1e-11) -> float:
    """Mean of the maximum of n draws, by quadrature of x n phi(x) Phi(x)^(n-1)."""
    n = _require_count("n", n)
    sigma = _positive_sigma(sigma)
    window = math.sqrt(2.0 * math.log(max(n, 2))) + 9.0

    def integrand(x: float) -> float:
        return n * x * std_normal_pdf(x) * math.exp((n - 1) * log_std_normal_cdf(x))

    return sigma * integrate(integrand, -window, window, rel_tol=rel_tol, abs_tol=1e-13)


def expected_max_monte_carlo(n: int, sigma: float, trials: int, stream: SeededStream,
                             workers: int = 1) -> tuple[float, float]:
    """Mean of per-trial maxima with its standard error."""
    n = _require_count("n", n)
    sigma = _positive_sigma(sigma)
    trials = _require_count("trials", trials)
    if trials < 2:
        raise DomainError("need at least 2 trials for a standard error")

    def block(gen, size):
        m = gen.standard_normal((size, n)).max(axis=1)
        return math.fsum(m), math.fsum(m * m)

    parts = _map_blocks(stream, trials, n, block, workers)
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / trials
    var = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
    return sigma * mean, sigma * math.sqrt(var / trials)


def expected_max(n: int, sigma: float = 1.0, method: str = "exact",
                 trials: int = 100_000, stream: SeededStream | None = None,
                 workers: int = 1) -> float:
    """Average value of the maximum of n draws at scale sigma.

    method "asymptotic" evaluates the gamma-prefactor shorthand, "exact"
    integrates the order-statistic density, "monte_carlo" averages seeded
    per-trial maxima (the standard error is available through
    expected_max_monte_carlo).
    """
    if method not in _EXPECTED_MAX_METHODS:
        raise DomainError(f"method must be one of {_EXPECTED_MAX_METHODS}, got {method!r}")
    if method == "asymptotic":
        return expected_max_asymptotic(n, sigma)
    if method == "exact":
        return expected_max_exact(n, sigma)
    if stream is None:
        raise DomainError("method 'monte_carlo' needs a SeededStream")
    return expected_max_monte_carlo(n, sigma, trials, stream, workers=workers)[0]


def euler_gamma_partial(n: int) -> float:
    """Partial sum sum_{k=1..n} 1/k - ln n.

    Decreases monotonically to EULER_GAMMA with tail about 1/(2n);
    compensated summation keeps the millionth partial sum exact to the
    last bit.
    """
    n = _require_count("n", n)
    return math.fsum(1.0 / k for k in range(1, n + 1)) - math.log(n)


def _positive_sigma(sigma: float) -> float:
    sigma = _require_finite("sigma", sigma)
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return sigma
