"""Batch command-line surface for standards authors.

Subcommands
    calibrate     calibrate the test threshold for the required count
    schedule      emit the count-dependent threshold schedule t(n')
    verify        Monte Carlo check of a schedule against the target p0
    simulate      minimal_effort or paradox demonstration runs
    expected-max  growth of the expected sample maximum with the count

Job file (JSON, all fields optional, unknown fields rejected):

    {
      "q0": 1.0,              true danger threshold (> 0)
      "p0": 0.01,             tolerated exceedance probability (0, 0.5)
      "n": 40,                required measurement count
      "n_list": [40, ...],    schedule counts; first entry must equal n
      "prior": {"type": "log_uniform", "sigma_lo": 0.01, "sigma_hi": 10.0},
      "cap_at_q0": true,      cap published thresholds at q0
      "tol": 1e-4,            calibration probability tolerance
      "trials": 100000,       Monte Carlo trials
      "seed": 0               master seed (unsigned 64-bit)
    }

Defaults: q0 = 1, p0 = 0.01, n = 40, n_list doubles from n to 16 n, the
prior is log-uniform on [q0/100, 10 q0], cap_at_q0 = true, tol = 1e-4,
trials = 100000, seed = 0.  Command-line flags override file fields.

All randomness flows from the single job seed through fixed stream indices:
verify uses stream 1 (one child per schedule row), simulate minimal_effort
stream 2, simulate paradox stream 3, expected-max stream 4.  Repeated runs
with the same inputs are byte-identical.

Tables go to standard output as CSV with a header row and 12-significant-
digit numbers; diagnostics go to standard error.  Exit codes: 0 success,
1 input error, 2 infeasibility (no threshold can meet the target),
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace

from .calibration import (
    SafetySpec,
    SigmaPrior,
    StandardRule,
    calibrate_threshold,
    threshold_schedule,
)
from .errors import (
    ConfigurationError,
    DomainError,
    InfeasibilityError,
    InfeasibleConditioningError,
    InsufficientDataError,
    SolverError,
)
from .gaussian import SeededStream, std_normal_quantile
from .paradox import (
    estimate_conditional_exceedance,
    expected_max_asymptotic,
    expected_max_exact,
    expected_max_monte_carlo,
    paradox_curve,
    simulate_minimal_effort,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFY_FAILED = 3

STREAM_VERIFY = 1
STREAM_MINIMAL_EFFORT = 2
STREAM_PARADOX = 3
STREAM_EXPECTED_MAX = 4

# fixed-rule acceptance probability the paradox demo anchors at n_required
_PARADOX_ANCHOR_ACCEPTANCE = 0.9

_JOB_FIELDS = ("q0", "p0", "n", "n_list", "prior", "cap_at_q0", "tol", "trials", "seed")
_PRIOR_FIELDS = ("type", "sigma_lo", "sigma_hi")


class JobError(ValueError):
    """Malformed job file or schedule input."""


@dataclass(frozen=True)
class JobSpec:
    """A fully resolved batch job."""

    spec: SafetySpec
    prior: SigmaPrior
    n_required: int
    n_list: tuple[int, ...]
    cap_at_q0: bool
    tol: float
    trials: int
    seed: int

    def __post_init__(self):
        if not self.n_list:
            raise JobError("n_list must not be empty")
        if self.n_list[0] != self.n_required:
            raise JobError(
                f"the first n_list entry must equal n ({self.n_required}), "
                f"got {self.n_list[0]}")
        if any(a >= b for a, b in zip(self.n_list, self.n_list[1:])):
            raise JobError(f"n_list must be strictly increasing, got {list(self.n_list)}")
        if not 0.0 < self.tol < 1.0:
            raise JobError(f"tol must lie in (0, 1), got {self.tol!r}")
        if self.trials < 1:
            raise JobError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise JobError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "q0": self.spec.q0,
            "p0": self.spec.p0,
            "n": self.n_required,
            "n_list": list(self.n_list),
            "prior": {"type": self.prior.kind,
                      "sigma_lo": self.prior.sigma_lo,
                      "sigma_hi": self.prior.sigma_hi},
            "cap_at_q0": self.cap_at_q0,
            "tol": self.tol,
            "trials": self.trials,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JobSpec":
        if not isinstance(data, dict):
            raise JobError(f"job file must hold a JSON object, got {type(data).__name__}")
        unknown = sorted(set(data) - set(_JOB_FIELDS))
        if unknown:
            raise JobError(f"unknown job fields: {', '.join(unknown)}")
        q0 = _as_number(data.get("q0", 1.0), "q0")
        p0 = _as_number(data.get("p0", 0.01), "p0")
        n = _as_int(data.get("n", 40), "n")
        n_list = data.get("n_list")
        if n_list is None:
            n_list = [n * 2**k for k in range(5)]
        if not isinstance(n_list, list):
            raise JobError("n_list must be a list of integers")
        n_list = tuple(_as_int(v, "n_list entry") for v in n_list)
        prior_data = data.get("prior", {})
        if not isinstance(prior_data, dict):
            raise JobError("prior must be an object")
        unknown = sorted(set(prior_data) - set(_PRIOR_FIELDS))
        if unknown:
            raise JobError(f"unknown prior fields: {', '.join(unknown)}")
        kind = prior_data.get("type", "log_uniform")
        sigma_lo = _as_number(prior_data.get("sigma_lo", q0 / 100.0), "sigma_lo")
        sigma_hi = _as_number(prior_data.get("sigma_hi", 10.0 * q0), "sigma_hi")
        cap = data.get("cap_at_q0", True)
        if not isinstance(cap, bool):
            raise JobError(f"cap_at_q0 must be a boolean, got {cap!r}")
        try:
            spec = SafetySpec(q0=q0, p0=p0)
            prior = SigmaPrior(kind, sigma_lo, sigma_hi)
        except DomainError as exc:
            raise JobError(str(exc)) from exc
        return cls(spec=spec, prior=prior, n_required=n, n_list=n_list,
                   cap_at_q0=cap, tol=_as_number(data.get("tol", 1e-4), "tol"),
                   trials=_as_int(data.get("trials", 100_000), "trials"),
                   seed=_as_int(data.get("seed", 0), "seed"))

    @classmethod
    def from_file(cls, path: str) -> "JobSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise JobError(f"cannot read job file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise JobError(f"job file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def _as_int(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise JobError(f"{name} must be an integer, got {value!r}")
    return value


def _as_number(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise JobError(f"{name} must be a number, got {value!r}")
    return float(value)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _csv(rows: list[list[str]]) -> str:
    return "\n".join(",".join(row) for row in rows) + "\n"


def _flag(value: bool) -> str:
    return "true" if value else "false"


def cmd_calibrate(job: JobSpec) -> tuple[int, str]:
    """Single calibration at the required count."""
    result = calibrate_threshold(job.spec, job.n_required, job.prior,
                                 cap_at_q0=job.cap_at_q0, tol=job.tol)
    rows = [["threshold", "achieved", "capped", "iterations",
             "uncapped_threshold", "bracket_lo", "bracket_hi"],
            [_fmt(result.threshold), _fmt(result.achieved), _flag(result.capped),
             str(result.iterations), _fmt(result.uncapped_threshold),
             _fmt(result.bracket[0]), _fmt(result.bracket[1])]]
    return EXIT_OK, _csv(rows)


def cmd_schedule(job: JobSpec) -> tuple[int, str]:
    """Threshold schedule over the job's n_list, one row per count."""
    rows = [["n_prime", "threshold", "achieved", "capped"]]
    entries = []
    for n_prime in job.n_list:
        try:
            result = calibrate_threshold(job.spec, n_prime, job.prior,
                                         cap_at_q0=job.cap_at_q0, tol=job.tol)
        except (InfeasibilityError, SolverError) as exc:
            raise type(exc)(f"schedule entry n' = {n_prime}: {exc}") from exc
        entries.append((n_prime, result.threshold))
        rows.append([str(n_prime), _fmt(result.threshold),
                     _fmt(result.achieved), _flag(result.capped)])
    # surfaces any monotonicity violation as a hard error before emitting
    StandardRule(n_required=job.n_list[0], threshold=entries[0][1],
                 schedule=tuple(entries))
    return EXIT_OK, _csv(rows)


def _parse_schedule_csv(text: str) -> list[tuple[int, float]]:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise JobError("schedule input needs a header row and at least one entry")
    header = [h.strip() for h in lines[0].split(",")]
    if "n_prime" not in header or "threshold" not in header:
        raise JobError("schedule header must name n_prime and threshold columns")
    i_n = header.index("n_prime")
    i_t = header.index("threshold")
    rows = []
    for line in lines[1:]:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != len(header):
            raise JobError(f"schedule row has {len(parts)} fields, expected {len(header)}: {line}")
        try:
            rows.append((int(parts[i_n]), float(parts[i_t])))
        except ValueError as exc:
            raise JobError(f"unparseable schedule row: {line}") from exc
    if any(a[0] >= b[0] for a, b in zip(rows, rows[1:])):
        raise JobError("schedule rows must be sorted with strictly increasing n_prime")
    return rows


def cmd_verify(job: JobSpec, schedule_text: str) -> tuple[int, str]:
    """Monte Carlo check of each schedule row against the target p0.

    A row passes when its estimated conditional exceedance does not exceed
    p0 by more than four standard errors (the guarantee is one-sided; a
    capped threshold may sit well below the target).  A row whose
    conditioning event never accepts is reported as nan and fails.
    """
    entries = _parse_schedule_csv(schedule_text)
    base = SeededStream(seed=job.seed, stream_index=STREAM_VERIFY)
    rows = [["n_prime", "threshold", "estimate", "standard_error",
             "accepted_runs", "pass"]]
    failures = 0
    for row_index, (n_prime, threshold) in enumerate(entries):
        try:
            report = estimate_conditional_exceedance(
                job.spec, threshold, n_prime, job.prior, job.trials,
                base.child(row_index))
            ok = report.estimate - job.spec.p0 <= 4.0 * report.standard_error
            rows.append([str(n_prime), _fmt(threshold), _fmt(report.estimate),
                         _fmt(report.standard_error), str(report.accepted_runs),
                         _flag(ok)])
        except InfeasibleConditioningError:
            ok = False
            rows.append([str(n_prime), _fmt(threshold), "nan", "nan", "0", "false"])
        failures += 0 if ok else 1
    print(f"verify: {len(entries) - failures}/{len(entries)} rows passed", file=sys.stderr)
    return (EXIT_OK if failures == 0 else EXIT_VERIFY_FAILED), _csv(rows)


def cmd_simulate(job: JobSpec, mode: str) -> tuple[int, str]:
    """Demonstration runs; see the module docstring for the two modes."""
    if mode == "minimal_effort":
        stream = SeededStream(seed=job.seed, stream_index=STREAM_MINIMAL_EFFORT)
        report = simulate_minimal_effort(job.n_required, job.trials, stream)
        rows = [["n", "estimate", "standard_error", "expected"],
                [str(job.n_required), _fmt(report.estimate),
                 _fmt(report.standard_error), _fmt(1.0 / (job.n_required + 1))]]
        return EXIT_OK, _csv(rows)

    # paradox mode: build the schedule, then pick the true scale so the
    # fixed-rule acceptance at the required count is the anchor value
    rule = threshold_schedule(job.spec, job.prior, job.n_list,
                              cap_at_q0=job.cap_at_q0, tol=job.tol)
    sigma_true = rule.threshold / std_normal_quantile(
        _PARADOX_ANCHOR_ACCEPTANCE ** (1.0 / rule.n_required))
    print(f"paradox: sigma_true = {_fmt(sigma_true)} anchors fixed-rule acceptance "
          f"{_fmt(_PARADOX_ANCHOR_ACCEPTANCE)} at n = {rule.n_required}", file=sys.stderr)
    stream = SeededStream(seed=job.seed, stream_index=STREAM_PARADOX)
    points = paradox_curve(job.spec, job.prior, sigma_true, rule, job.n_list,
                           job.trials, stream)
    rows = [["n_prime", "rejection_fixed", "rejection_schedule"]]
    for point in points:
        rows.append([str(point.n_prime), _fmt(point.rejection_fixed),
                     _fmt(point.rejection_schedule)])
    return EXIT_OK, _csv(rows)


def cmd_expected_max(n: int, sigma: float, method: str, trials: int,
                     seed: int) -> tuple[int, str]:
    """Expected-maximum estimates; method 'all' compares the three routes."""
    stream = SeededStream(seed=seed, stream_index=STREAM_EXPECTED_MAX)
    if method == "asymptotic":
        return EXIT_OK, _fmt(expected_max_asymptotic(n, sigma)) + "\n"
    if method == "exact":
        return EXIT_OK, _fmt(expected_max_exact(n, sigma)) + "\n"
    if method == "monte_carlo":
        mean, _ = expected_max_monte_carlo(n, sigma, trials, stream)
        return EXIT_OK, _fmt(mean) + "\n"
    asym = expected_max_asymptotic(n, sigma)
    exact = expected_max_exact(n, sigma)
    mc_mean, mc_se = expected_max_monte_carlo(n, sigma, trials, stream)
    rows = [["method", "value", "standard_error"],
            ["asymptotic", _fmt(asym), ""],
            ["exact", _fmt(exact), ""],
            ["monte_carlo", _fmt(mc_mean), _fmt(mc_se)],
            ["exact_over_asymptotic", _fmt(exact / asym), ""]]
    return EXIT_OK, _csv(rows)


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; this surface reserves 2 for
    infeasibility, so usage errors are rethrown as input errors."""

    def error(self, message):
        raise JobError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="threshcal",
                     description="calibrate and verify count-dependent safety test thresholds")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--job", metavar="PATH", help="JSON job file (defaults apply without it)")
        p.add_argument("--seed", type=int, help="override the job seed")
        p.add_argument("--trials", type=int, help="override the job trial count")
        p.add_argument("--out", metavar="PATH", help="write the table to a file instead of stdout")

    add_common(sub.add_parser("calibrate", help="calibrate the threshold at the required count"))
    add_common(sub.add_parser(
        "schedule", help="emit the threshold schedule over the job's n_list"))

    p_verify = sub.add_parser("verify", help="Monte Carlo check of a schedule table")
    add_common(p_verify)
    p_verify.add_argument("--schedule", metavar="PATH", required=True,
                          help="schedule CSV with n_prime and threshold columns")

    p_sim = sub.add_parser("simulate", help="run a demonstration")
    add_common(p_sim)
    p_sim.add_argument("mode", choices=["minimal_effort", "paradox"])

    p_em = sub.add_parser("expected-max", help="expected sample maximum by count")
    add_common(p_em)
    p_em.add_argument("--n", type=int, required=True, help="sample size")
    p_em.add_argument("--sigma", type=float, default=1.0, help="scale (default 1.0)")
    p_em.add_argument("--method", choices=["asymptotic", "exact", "monte_carlo", "all"],
                      default="all")
    return parser


def _load_job(args) -> JobSpec:
    job = JobSpec.from_file(args.job) if args.job else JobSpec.from_dict({})
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise JobError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        job = replace(job, seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise JobError(f"--trials must be >= 1, got {args.trials}")
        job = replace(job, trials=args.trials)
    return job


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "expected-max":
            job = _load_job(args)
            code, text = cmd_expected_max(args.n, args.sigma, args.method,
                                          job.trials, job.seed)
        elif args.command == "calibrate":
            code, text = cmd_calibrate(_load_job(args))
        elif args.command == "schedule":
            code, text = cmd_schedule(_load_job(args))
        elif args.command == "verify":
            try:
                with open(args.schedule, "r", encoding="utf-8") as fh:
                    schedule_text = fh.read()
            except OSError as exc:
                raise JobError(f"cannot read schedule file {args.schedule}: {exc}") from exc
            code, text = cmd_verify(_load_job(args), schedule_text)
        else:
            code, text = cmd_simulate(_load_job(args), args.mode)
    except (JobError, DomainError, ConfigurationError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (InfeasibilityError, InfeasibleConditioningError, SolverError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
