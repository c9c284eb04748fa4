"""Why "all n measurements below the danger threshold" is a weak guarantee.

A resource-constrained designer relaxes mitigation exactly until the worst
of n measurements touches the danger threshold q0.  The next measurement is
then one more exchangeable draw, and it beats the previous maximum with
probability 1/(n+1) no matter what the distribution or the scale is.  Even
a thorough 40-measurement campaign leaves a ~2.5% chance that the very next
value crosses q0.

Run:  python3 demos/minimal_effort_danger.py
"""

from threshcal import SeededStream, next_exceeds_max_probability, simulate_minimal_effort

TRIALS = 200_000


def main():
    stream = SeededStream(seed=0, stream_index=2)
    print(f"minimal-effort designer, {TRIALS} simulated campaigns per row\n")
    print(f"{'n':>5}  {'simulated':>10}  {'4*se':>9}  {'1/(n+1)':>9}")
    for n in (1, 5, 10, 40, 99, 400):
        report = simulate_minimal_effort(n, TRIALS, stream)
        law = next_exceeds_max_probability(n)
        print(f"{n:>5}  {report.estimate:>10.5f}  {4 * report.standard_error:>9.5f}"
              f"  {law:>9.5f}")
    print("\nMore required measurements push the residual danger down only "
          "like 1/(n+1); a calibrated test threshold below q0 does far better.")


if __name__ == "__main__":
    main()
