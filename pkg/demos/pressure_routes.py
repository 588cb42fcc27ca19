"""Pressure of three shifts by independent routes.

Golden mean and renewal shift with the zero potential, and the full shift
on a countable alphabet with a(i) = -2 log i. Each value is computed by the
spectral radius of a truncation, by periodic-point sums and, where the
family allows it, by the first-return discriminant or the closed form.
"""

import math

from cmsthermo import (
    build_induced, build_truncation, discriminant, full_shift, golden_mean, gurevich_estimate,
    log_law, pressure_limit, renewal_shift, spectral_pressure, zero,
)


def row(name, *vals):
    print(f"{name:<28}" + "".join(f"{v:>22.15f}" for v in vals))


def main():
    print(f"{'':<28}{'spectral':>22}{'periodic sums':>22}{'third route':>22}")
    g = build_truncation(golden_mean())
    row("golden mean, phi = 0", spectral_pressure(g, zero()).value,
        gurevich_estimate(g, zero(), n_max=60).value, math.log((1 + math.sqrt(5)) / 2))

    disc = discriminant(build_induced(renewal_shift(), zero()))
    row("renewal, phi = 0", spectral_pressure(build_truncation(renewal_shift(), 40), zero()).value,
        gurevich_estimate(renewal_shift(), zero(), N_schedule=(10, 20, 30, 40)).value,
        disc.implied_pressure)

    phi = log_law(2.0)
    row("full shift, a(i) = -2 log i", spectral_pressure(build_truncation(full_shift(), 10_000), phi).value,
        float("nan"), pressure_limit(full_shift(), phi).value)
    print()
    print("The full shift with a(i) = -2 log i has P = log(pi^2/6) =", math.log(math.pi ** 2 / 6))
    print("and a(i) = -log i sits on the boundary:", pressure_limit(full_shift(), log_law(1.0)).verdict)


if __name__ == "__main__":
    main()
