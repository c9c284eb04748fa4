"""Test-threshold calibration against a conditional exceedance target.

A safety standard pins a true danger threshold q0 and a tolerated
probability p0 for a future observation exceeding q0.  When the measurement
scale sigma is known, conditioning on "all n observed values stayed below a
test threshold" says nothing about an independent future draw, so the
conditional exceedance collapses to the plain tail probability.  The scale
is therefore modeled as unknown with a prior; passing the test then shifts
the posterior toward smaller scales, and

    P(next > q0 | max of n observations <= t)

becomes a posterior-predictive quantity that the test threshold t controls.
Calibration finds the largest t whose conditional exceedance stays within
p0, and a standard publishes t as a function of the measurement count.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    InfeasibilityError,
    InfeasibleConditioningError,
    InsufficientDataError,
    SolverError,
)
from .gaussian import (
    _require_count,
    _require_finite,
    integrate,
    log_cdf_power,
    log_std_normal_cdf,
    std_normal_sf,
)

# Conditioning events with posterior-predictive probability below this are
# treated as impossible rather than conditioned on.
_LOG_UNDERFLOW_FLOOR = math.log(1e-300)

_MAX_EXPANSIONS = 64
_MAX_CONTRACTIONS = 200
_MAX_BISECTIONS = 200


@dataclass(frozen=True)
class SafetySpec:
    """True danger threshold q0 and tolerated future-exceedance probability p0.

    Measurements are assumed mean-centered by the caller, so a meaningful
    danger threshold lies strictly above zero.
    """

    q0: float
    p0: float

    def __post_init__(self):
        _require_finite("q0", self.q0)
        if self.q0 <= 0.0:
            raise DomainError(f"q0 must be positive, got {self.q0}")
        if not 0.0 < self.p0 < 0.5:
            raise DomainError(f"p0 must lie in (0, 0.5), got {self.p0!r}")


@dataclass(frozen=True)
class SigmaPrior:
    """Uncertainty model for the unknown measurement scale.

    kind = "log_uniform": sigma is log-uniform on [sigma_lo, sigma_hi].
    kind = "point":       sigma is known exactly (sigma_lo == sigma_hi);
                          kept so the known-scale vacuity is explicit and
                          testable.
    """

    kind: str
    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        if self.kind not in ("log_uniform", "point"):
            raise DomainError(f"unknown prior kind {self.kind!r}")
        _require_finite("sigma_lo", self.sigma_lo)
        _require_finite("sigma_hi", self.sigma_hi)
        if not 0.0 < self.sigma_lo <= self.sigma_hi:
            raise DomainError(
                f"need 0 < sigma_lo <= sigma_hi, got [{self.sigma_lo}, {self.sigma_hi}]")
        if (self.kind == "point") != (self.sigma_lo == self.sigma_hi):
            raise DomainError("kind 'point' requires sigma_lo == sigma_hi, and vice versa")

    @classmethod
    def log_uniform(cls, sigma_lo: float, sigma_hi: float) -> "SigmaPrior":
        return cls("log_uniform", float(sigma_lo), float(sigma_hi))

    @classmethod
    def point(cls, sigma: float) -> "SigmaPrior":
        return cls("point", float(sigma), float(sigma))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw scales from the prior."""
        if self.kind == "point":
            return np.full(count, self.sigma_lo)
        return np.exp(rng.uniform(math.log(self.sigma_lo), math.log(self.sigma_hi), size=count))


@dataclass(frozen=True)
class StandardRule:
    """A published standard: required count, test threshold, and the
    extended threshold schedule for practitioners who measure more."""

    n_required: int
    threshold: float
    schedule: tuple[tuple[int, float], ...]

    def __post_init__(self):
        _require_count("n_required", self.n_required)
        _require_finite("threshold", self.threshold)
        if not self.schedule:
            raise ConfigurationError("schedule must not be empty")
        object.__setattr__(self, "schedule", tuple((int(n), float(t)) for n, t in self.schedule))
        ns = [n for n, _ in self.schedule]
        ts = [t for _, t in self.schedule]
        if ns[0] != self.n_required or ts[0] != self.threshold:
            raise ConfigurationError(
                "first schedule entry must be (n_required, threshold), got "
                f"({ns[0]}, {ts[0]})")
        if any(a >= b for a, b in zip(ns, ns[1:])):
            raise ConfigurationError(f"schedule counts must be strictly increasing, got {ns}")
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise ConfigurationError(f"schedule thresholds must be non-decreasing, got {ts}")

    def entry_for(self, n_prime: int) -> tuple[int, float]:
        """Schedule entry applied to n_prime measurements: the exact entry,
        or the entry for the largest tabulated count below it (conservative,
        since thresholds are non-decreasing)."""
        n_prime = _require_count("n_prime", n_prime)
        ns = [n for n, _ in self.schedule]
        idx = _bisect.bisect_right(ns, n_prime) - 1
        if idx < 0:
            raise ConfigurationError(
                f"no schedule entry at or below n' = {n_prime} (first entry is {ns[0]})")
        return self.schedule[idx]


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated threshold plus solver diagnostics."""

    threshold: float
    achieved: float
    iterations: int
    bracket: tuple[float, float]
    capped: bool
    uncapped_threshold: float

    def __post_init__(self):
        if not 0.0 <= self.achieved <= 1.0:
            raise DomainError(f"achieved must be a probability, got {self.achieved}")
        if self.iterations < 0:
            raise DomainError("iterations must be >= 0")
        lo, hi = self.bracket
        if not lo <= self.threshold <= hi:
            raise DomainError(
                f"threshold {self.threshold} outside bracket [{lo}, {hi}]")


@dataclass(frozen=True)
class ComplianceDecision:
    """Outcome of checking measurements against a standard."""

    safe: bool
    applied_n: int
    applied_threshold: float
    n_measurements: int
    observed_max: float


def next_exceeds_max_probability(n: int) -> float:
    """Probability that one further exchangeable continuous draw exceeds the
    maximum of n prior draws: exactly 1/(n+1)."""
    n = _require_count("n", n)
    return 1.0 / (n + 1)


def marginal_exceedance(spec: SafetySpec, sigma: float) -> float:
    """P(next draw > q0) under a known scale: 1 - Phi(q0/sigma)."""
    sigma = _require_finite("sigma", sigma)
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return std_normal_sf(spec.q0 / sigma)


def conditional_exceedance(spec: SafetySpec, threshold: float, n: int,
                           prior: SigmaPrior, rel_tol: float = 1e-10) -> float:
    """P(next draw > q0 | max of n draws <= threshold), prior-averaged.

    Under a point prior the conditioning event is independent of the next
    draw and the value collapses to marginal_exceedance.  Otherwise the
    numerator and denominator are integrated over ln(sigma), with the
    acceptance weight Phi(threshold/sigma)**n evaluated in log space and
    shifted by its maximum so the ratio survives draw counts up to 1e6.
    """
    threshold = _require_finite("threshold", threshold)
    n = _require_count("n", n)
    if prior.kind == "point":
        return marginal_exceedance(spec, prior.sigma_lo)

    t_lo = math.log(prior.sigma_lo)
    t_hi = math.log(prior.sigma_hi)
    width = t_hi - t_lo

    def log_weight(t: float) -> float:
        return n * log_std_normal_cdf(threshold * math.exp(-t))

    # The log-weight is monotone in t, so its maximum sits at an endpoint.
    shift = max(log_weight(t_lo), log_weight(t_hi))

    def weight(t: float) -> float:
        return math.exp(log_weight(t) - shift)

    def numerator(t: float) -> float:
        return std_normal_sf(spec.q0 * math.exp(-t)) * weight(t)

    denom = integrate(weight, t_lo, t_hi, rel_tol=rel_tol)
    if denom <= 0.0 or shift + math.log(denom / width) < _LOG_UNDERFLOW_FLOOR:
        raise InfeasibleConditioningError(
            f"the event max <= {threshold} with n = {n} has negligible "
            f"probability under the prior [{prior.sigma_lo}, {prior.sigma_hi}]")
    numer = integrate(numerator, t_lo, t_hi, rel_tol=rel_tol)
    return numer / denom


def acceptance_probability(sigma_true: float, threshold: float, n: int) -> float:
    """P(max of n draws at scale sigma_true <= threshold) = Phi(t/sigma)**n."""
    sigma_true = _require_finite("sigma_true", sigma_true)
    if sigma_true <= 0.0:
        raise DomainError(f"sigma_true must be positive, got {sigma_true}")
    threshold = _require_finite("threshold", threshold)
    return math.exp(log_cdf_power(threshold / sigma_true, n))


def calibrate_threshold(spec: SafetySpec, n: int, prior: SigmaPrior,
                        cap_at_q0: bool = True, tol: float = 1e-4) -> CalibrationResult:
    """Largest test threshold whose conditional exceedance stays within p0.

    Root-finding is bisection on the rising branch of the threshold map,
    anchored at q0: the bracket expands upward by doubling while the
    exceedance at the top is still below p0, or contracts downward by
    halving while it is above.  Bisection stops at threshold resolution
    1e-9 * q0 or when the achieved probability is within tol of p0,
    whichever binds first.

    With cap_at_q0, a solution above q0 is reported as threshold q0 with
    capped = True; the uncapped solution stays available in
    uncapped_threshold (inf when the constraint holds at every threshold,
    as under a compatible point prior).
    """
    n = _require_count("n", n)
    if not 0.0 < tol < 1.0:
        raise DomainError(f"tol must lie in (0, 1), got {tol!r}")
    resolution = 1e-9 * spec.q0

    marg_lo = marginal_exceedance(spec, prior.sigma_lo)
    if marg_lo > spec.p0:
        raise InfeasibilityError(
            f"infeasible: even the smallest prior scale sigma_lo = {prior.sigma_lo} "
            f"gives exceedance {marg_lo:.6g} > p0 = {spec.p0:.6g}; "
            f"no test threshold can fix that")

    if prior.kind == "point":
        # Conditioning is vacuous: the constraint holds at every threshold.
        if cap_at_q0:
            return CalibrationResult(threshold=spec.q0, achieved=marg_lo, iterations=0,
                                     bracket=(spec.q0, spec.q0), capped=True,
                                     uncapped_threshold=math.inf)
        raise SolverError(
            "the exceedance constraint holds at every threshold under this point "
            "prior; there is no finite uncapped solution (enable cap_at_q0)")

    ce_q0 = conditional_exceedance(spec, spec.q0, n, prior)
    if ce_q0 <= spec.p0:
        lo, ce_lo = spec.q0, ce_q0
        hi = None
        trial = 2.0 * spec.q0
        for _ in range(_MAX_EXPANSIONS):
            ce_trial = conditional_exceedance(spec, trial, n, prior)
            if ce_trial > spec.p0:
                hi = trial
                break
            lo, ce_lo = trial, ce_trial
            trial *= 2.0
        if hi is None:
            if cap_at_q0:
                return CalibrationResult(threshold=spec.q0, achieved=ce_q0, iterations=0,
                                         bracket=(spec.q0, spec.q0), capped=True,
                                         uncapped_threshold=math.inf)
            raise SolverError(
                f"bracket expansion failed: conditional exceedance stayed below "
                f"p0 = {spec.p0} up to threshold {lo}")
    else:
        hi = spec.q0
        lo = None
        trial = 0.5 * spec.q0
        for _ in range(_MAX_CONTRACTIONS):
            try:
                ce_trial = conditional_exceedance(spec, trial, n, prior)
            except InfeasibleConditioningError:
                break
            if ce_trial <= spec.p0:
                lo, ce_lo = trial, ce_trial
                break
            hi = trial
            trial *= 0.5
        if lo is None:
            raise InfeasibilityError(
                f"infeasible: conditional exceedance stays above p0 = {spec.p0} "
                f"for every threshold below q0 = {spec.q0}; prior mass up to "
                f"sigma_hi = {prior.sigma_hi} is too heavy for n = {n}")

    iterations = 0
    best, best_ce = lo, ce_lo
    while hi - lo > resolution and iterations < _MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        ce_mid = conditional_exceedance(spec, mid, n, prior)
        iterations += 1
        if ce_mid <= spec.p0:
            lo, best, best_ce = mid, mid, ce_mid
        else:
            hi = mid
        if abs(ce_mid - spec.p0) <= tol:
            best, best_ce = mid, ce_mid
            break

    if cap_at_q0 and best > spec.q0:
        return CalibrationResult(threshold=spec.q0, achieved=ce_q0, iterations=iterations,
                                 bracket=(spec.q0, spec.q0), capped=True,
                                 uncapped_threshold=best)
    return CalibrationResult(threshold=best, achieved=best_ce, iterations=iterations,
                             bracket=(lo, hi), capped=False, uncapped_threshold=best)


def threshold_schedule(spec: SafetySpec, prior: SigmaPrior, n_list: Sequence[int],
                       cap_at_q0: bool = True, tol: float = 1e-4) -> StandardRule:
    """Calibrate a threshold for every count in n_list and package the result
    as a StandardRule whose required count is the first entry."""
    if not n_list:
        raise DomainError("n_list must not be empty")
    counts = [_require_count("n'", n) for n in n_list]
    if any(a >= b for a, b in zip(counts, counts[1:])):
        raise DomainError(f"n_list must be strictly increasing, got {list(n_list)}")
    entries = []
    for n_prime in counts:
        try:
            result = calibrate_threshold(spec, n_prime, prior, cap_at_q0=cap_at_q0, tol=tol)
        except (InfeasibilityError, SolverError) as exc:
            raise type(exc)(f"schedule entry n' = {n_prime}: {exc}") from exc
        entries.append((n_prime, result.threshold))
    return StandardRule(n_required=counts[0], threshold=entries[0][1],
                        schedule=tuple(entries))


def evaluate_compliance(rule: StandardRule, measurements: Iterable[float]) -> ComplianceDecision:
    """Apply a standard to observed measurements.

    The threshold applied is the schedule entry for the measurement count,
    falling back to the largest tabulated count below it.  Safe means the
    observed maximum does not exceed that threshold.
    """
    values = np.asarray(list(measurements), dtype=float)
    if values.size == 0:
        raise InsufficientDataError("measurements must not be empty")
    if not np.all(np.isfinite(values)):
        raise DomainError("measurements must all be finite")
    n_prime = int(values.size)
    if n_prime < rule.n_required:
        raise InsufficientDataError(
            f"{n_prime} measurements but the standard requires at least {rule.n_required}")
    applied_n, applied_t = rule.entry_for(n_prime)
    observed_max = float(values.max())
    return ComplianceDecision(safe=observed_max <= applied_t,
                              applied_n=applied_n,
                              applied_threshold=applied_t,
                              n_measurements=n_prime,
                              observed_max=observed_max)
