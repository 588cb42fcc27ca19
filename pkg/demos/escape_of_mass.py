"""Mass escaping to infinity and the semi-continuity bound.

Measures on ever longer renewal loops converge on cylinders to the zero
measure: all their mass leaves through high symbols. Equilibrium states of
a(i) = -i on growing truncations of the full shift keep their mass. Mixing
a fixed measure with deep loops gives a limit of total mass 1/2, and the
free energies stay below the bound lam F(mu) + (1 - lam) P_inf.
"""

import dataclasses

from cmsthermo import (
    escape_sequence, full_shift, linear_law, mass_loss_diagnostic, pressure_at_infinity,
    renewal_loop_measure, renewal_shift, semicontinuity_check, zero,
)


def main():
    ks = (2, 5, 10, 20)
    loops = escape_sequence(renewal_shift(), "deep-loops")
    eq = escape_sequence(full_shift(), "truncated-equilibria", {"phi": linear_law(1.0)})
    for name, seq in (("deep loops", loops), ("truncated equilibria", eq)):
        table = mass_loss_diagnostic(seq, ks, prefix=50)
        print(f"{name:<22}" + "  ".join(f"k={k}: {m:.3f}" for k, m in zip(ks, table.limsup)))

    mu = renewal_loop_measure([1, 2])
    inner = escape_sequence(renewal_shift(), "deep-loops", {"width": 40})
    seq = escape_sequence(None, "convex-combination", {"lam": 0.5, "mu": mu, "inner": inner})
    p_inf = pressure_at_infinity(renewal_shift(), zero()).conservative
    rep = semicontinuity_check(dataclasses.replace(seq, start=100), zero(), p_inf, prefix=50)
    print(f"half-escaping mixture: limsup F = {rep.lhs:.4f}, bound = {rep.rhs:.4f}, slack = {rep.slack:.4f}")


if __name__ == "__main__":
    main()
