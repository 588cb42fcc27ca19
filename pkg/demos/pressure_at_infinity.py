"""Pressure at infinity on a family with escaping mass and on one without.

The renewal shift has arbitrarily long first-return loops; their growth rate
is the entropy at infinity, 0, while the topological entropy is log 2, so
the zero potential is strongly positive recurrent with margin log 2. On the
star shift every orbit returns to 1 every other step, the restricted sums
vanish and the pressure at infinity is -inf.
"""

import math

from cmsthermo import (
    build_truncation, edge, pressure_at_infinity, renewal_shift, restricted_partition_sum,
    spr_test, star_shift, uniform_rome_check, zero,
)


def main():
    rep = pressure_at_infinity(renewal_shift(), zero())
    print("renewal, phi = 0")
    for r in rep.route_a["pairs"]:
        print(f"  restricted sums q={r['q']:>2} M={r['M']:>2}: {r['value']:.4f}")
    print(f"  penalised limit: {rep.route_b['value']:.4f}")
    ok, info = spr_test(renewal_shift(), zero())
    print(f"  SPR: {ok}, margin {info['margin']:.4f} (log 2 = {math.log(2):.4f})")

    phi = edge(lambda a, b: -1.5 * math.log(max(a, b)))
    print("star, phi(1, n) = phi(n, 1) = -1.5 log n")
    g = build_truncation(star_shift(), 50)
    print("  Z_n(q=1, M=3) for n = 2..8:", [restricted_partition_sum(g, phi, 1, n, 1, 3) for n in range(2, 9)])
    print("  uniform Rome {1} with bound 1:", uniform_rome_check(star_shift(), {1}, 1).holds)
    print("  pressure at infinity:", pressure_at_infinity(star_shift(), phi).value)


if __name__ == "__main__":
    main()
