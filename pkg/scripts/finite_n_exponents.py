"""Exact finite-N effective exponents, no simulation.

For a shift ``x`` the centered summand expands as ``sum_m c_m(x) He_m(Y)``, and
distinct Hermite orders are uncorrelated, so
``Var S_N = sum_m c_m(x)^2 Var sum He_m(Y(n))``. The dyadic slope of the
square root over the default grid is what a Monte Carlo run estimates, before
sampling noise.

    python scripts/finite_n_exponents.py [--hurst 0.8] [--c 1.0]
"""
import argparse
import math

import numpy as np

from hermrank.config import DEFAULTS
from hermrank.gaussian_sim import variance_of_hermite_sums
from hermrank.hermite_core import FunctionSpec, expand
from hermrank.regime_lab import ShiftSchedule, dyadic_slope, predict_regime


def exact_sd(spec, H, x, N, order=12):
    c = expand(spec.with_affine(x, 1.0), order).coefficients
    return math.sqrt(sum(c[m] ** 2 * variance_of_hermite_sums(H, m, N) for m in range(1, order + 1) if c[m] != 0))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--hurst", type=float, default=0.8)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--betas", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3, 0.35])
    args = p.parse_args(argv)

    spec = FunctionSpec.polynomial([-1, 0, 1])
    grid = DEFAULTS.n_grid
    print(f"centered z^2 - 1, H={args.hurst}, x_N = {args.c} N^-beta, N = {grid[0]}..{grid[-1]}")
    print(f"{'beta':>6} {'predicted':>10} {'exact finite-N':>15}")
    for beta in args.betas:
        sched = ShiftSchedule.power_law(args.c, beta)
        sd = [exact_sd(spec, args.hurst, sched.shift(N), N) for N in grid]
        slope = dyadic_slope(grid, sd)[0]
        pred = predict_regime(args.hurst, 2, sched).fluctuation_exponent
        print(f"{beta:6.2f} {pred:10.3f} {slope:15.3f}")

    print("\nunperturbed Hermite sums")
    for H, m in [(0.8, 2), (0.6, 2), (0.7, 1), (0.8, 3)]:
        sd = [math.sqrt(variance_of_hermite_sums(H, m, N)) for N in grid]
        print(f"H={H} m={m}: exact slope {dyadic_slope(grid, sd)[0]:.4f}, "
              f"index {max((H - 1) * m + 1, 0.5):.4f}")

    # non-centered drift: mean N x^2 plus the centered spread, as a root mean square
    print("\nnon-centered z^2 - 1, H=0.8, beta=0.1")
    for c in (1.0, 2.0, 4.0):
        sched = ShiftSchedule.power_law(c, 0.1)
        rms = [math.hypot(N * sched.shift(N) ** 2, exact_sd(spec, 0.8, sched.shift(N), N)) for N in grid]
        print(f"c={c}: exact slope {dyadic_slope(grid, rms)[0]:.3f}, predicted 0.800")


if __name__ == "__main__":
    main()
