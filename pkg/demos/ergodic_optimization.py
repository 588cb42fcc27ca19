"""Maximising measures, their absence, and the zero-temperature limit.

On the golden mean the indicator of [1] is maximised by the period-2 orbit.
On the renewal shift phi = 1 - 1/x_1 has truncated maxima creeping up to 1
while the only candidates live ever higher: no maximising measure exists.
"""

from cmsthermo import (
    beta, build_truncation, constant, golden_mean, indicator, optimize, penalty, renewal_shift,
    zero_temperature,
)


def main():
    g = build_truncation(golden_mean())
    rep = beta(g, indicator((1,)))
    print(f"golden mean: beta = {rep.beta}, maximising cycle {rep.cycle}")
    zt = zero_temperature(g, indicator((1,)))
    for t, v in list(zip(zt.ts, zt.integrals))[::2]:
        print(f"  t = {t:>6g}: int phi dmu_t = {v:.6f}")

    phi = constant(1.0) - penalty()
    rep = optimize(renewal_shift(), phi)
    print("renewal, phi = 1 - 1/x1")
    for N, b in rep.diagnostics["beta_N"]:
        print(f"  N = {N:>5}: beta_N = {b:.6f}")
    print(f"  beta_inf = {rep.beta_inf:.6f}, verdict: {rep.verdict}")


if __name__ == "__main__":
    main()
