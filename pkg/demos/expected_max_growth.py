"""How far the sample maximum drifts up as measurements accumulate.

Whatever the threshold, enough measurements will eventually cross it: the
expected maximum of n centered Gaussian draws grows without bound.  This
script compares three routes to that number:

* exact: quadrature of the order-statistic mean integral,
* monte_carlo: seeded simulation with a standard error,
* asymptotic: the gamma-prefactor shorthand EULER_GAMMA * sqrt(2 ln n),
  which undershoots the exact mean (the true growth rate is sqrt(2 ln n)
  alone; the exact/sqrt(2 ln n) ratio below creeps toward 1 from below).

It also prints the harmonic partial sums whose limit is the constant in
that shorthand.

Run:  python3 demos/expected_max_growth.py
"""

import math

from threshcal import (
    EULER_GAMMA,
    SeededStream,
    euler_gamma_partial,
    expected_max_asymptotic,
    expected_max_exact,
    expected_max_monte_carlo,
)


def main():
    stream = SeededStream(seed=0, stream_index=4)
    print(f"{'n':>7}  {'exact':>8}  {'monte carlo':>16}  {'asymptotic':>10}  "
          f"{'exact/sqrt(2 ln n)':>18}")
    for n in (2, 10, 100, 1000, 10000):
        exact = expected_max_exact(n)
        mc, se = expected_max_monte_carlo(n, 1.0, 50_000, stream)
        asym = expected_max_asymptotic(n)
        ratio = exact / math.sqrt(2.0 * math.log(n))
        print(f"{n:>7}  {exact:>8.4f}  {mc:>9.4f} +/- {se:.4f}  {asym:>10.4f}  "
              f"{ratio:>18.4f}")
    print(f"\nE[max of 2] = 1/sqrt(pi) = {1.0 / math.sqrt(math.pi):.9f} (closed form)")

    print("\nharmonic partial sums minus ln n:")
    for n in (1, 10, 1000, 100_000, 1_000_000):
        print(f"  n = {n:>9}: {euler_gamma_partial(n):.9f}")
    print(f"  limit:         {EULER_GAMMA:.9f}")


if __name__ == "__main__":
    main()
