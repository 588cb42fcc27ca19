import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo import (
    build_truncation, constant, edge, escape_sequence, full_shift, golden_mean, h_of_roof,
    log_law, linear_law, partition_sum, pressure_at_infinity, renewal_loop_measure, renewal_shift,
    restricted_partition_sum, s_infinity, semicontinuity_check, spr_test, star_shift, table, zero,
)

from strategies import edge_tables, finite_graphs

LOG2 = math.log(2)


def renewal_composition_count(n, q, M):
    """Compositions of n into renewal loops with at most n // M low visits.

    A loop of length k visits 1, k, k-1, ..., 2, so it has min(k, q) visits of level <= q.
    """
    cap = n // M
    ways = [[0] * (cap + 1) for _ in range(n + 1)]
    ways[0][0] = 1
    for m in range(1, n + 1):
        for k in range(1, m + 1):
            c = min(k, q)
            for used in range(c, cap + 1):
                ways[m][used] += ways[m - k][used - c]
    return sum(ways[n])


def brute_restricted(g, phi, a, n, q, M):
    total = 0.0
    for mid in itertools.product(g.vertices, repeat=n - 1):
        w = (a,) + mid
        if not all(g.has_edge(x, y) for x, y in zip(w, w[1:] + (a,))):
            continue
        if sum(1 for x in w if g.level(x) <= q) <= n // M:
            total += math.exp(phi.birkhoff(w))
    return total


# restricted sums ----------------------------------------------------------------


def test_star_restricted_sums_vanish():
    g = build_truncation(star_shift(), 30)
    for n in (2, 5, 10, 11):
        assert restricted_partition_sum(g, zero(), 1, n, 1, 3) == 0.0


def test_vacuous_restriction_is_partition_sum():
    g = build_truncation(renewal_shift(), 12)
    phi = log_law(1.0)
    for n in (3, 7, 12):
        assert restricted_partition_sum(g, phi, 1, n, 12, 1) == pytest.approx(partition_sum(g, phi, 1, n),
                                                                            rel=1e-12)


def test_renewal_restricted_count_by_compositions():
    g = build_truncation(renewal_shift(), 50)
    assert restricted_partition_sum(g, zero(), 1, 50, 5, 5) == pytest.approx(
        renewal_composition_count(50, 5, 5), rel=1e-12)


@given(finite_graphs(max_n=4), st.data(), st.integers(1, 6), st.integers(1, 4), st.integers(1, 3))
def test_restricted_sums_match_enumeration(g, data, n, q, M):
    vals = data.draw(edge_tables(g))
    phi = table(vals)
    a = g.vertices[0]
    ref = brute_restricted(g, phi, a, n, q, M)
    assert restricted_partition_sum(g, phi, a, n, q, M) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(st.integers(1, 40), st.integers(1, 8), st.integers(1, 5))
def test_restricted_sums_monotone_in_q(n, q, M):
    g = build_truncation(renewal_shift(), 40)
    lo = restricted_partition_sum(g, zero(), 1, n, q + 1, M)
    hi = restricted_partition_sum(g, zero(), 1, n, q, M)
    total = partition_sum(g, zero(), 1, n)
    assert lo <= hi * (1 + 1e-12)
    assert hi <= total * (1 + 1e-12)


# pressure at infinity -------------------------------------------------------------


def test_renewal_pressure_at_infinity():
    rep = pressure_at_infinity(renewal_shift(), zero())
    assert rep.verdict == "finite"
    assert abs(rep.value) <= 0.05
    assert rep.route_a["value"] <= 0.05


def test_star_pressure_at_infinity():
    rep = pressure_at_infinity(star_shift(), edge(lambda a, b: -1.5 * math.log(max(a, b))))
    assert rep.verdict == "-inf" and rep.value == -math.inf
    # also when P(phi) itself is infinite
    assert pressure_at_infinity(star_shift(), zero()).verdict == "-inf"


def test_compact_pressure_at_infinity():
    assert pressure_at_infinity(full_shift(2), zero()).verdict == "-inf"
    assert pressure_at_infinity(build_truncation(golden_mean()), zero()).value == -math.inf


# s_inf and h(tau) ----------------------------------------------------------------


def test_s_infinity_examples():
    assert s_infinity(full_shift(), log_law(2.0))["value"] == 0.5
    assert s_infinity(full_shift(), linear_law(1.0))["value"] == 0.0
    assert s_infinity(build_truncation(golden_mean()), zero())["value"] == 0.0


def test_h_of_constant_roof_renewal():
    rep = h_of_roof(renewal_shift(), constant(1.0))
    assert rep["value"] == pytest.approx(0.0, abs=0.05)


def test_h_of_roof_compact():
    rep = h_of_roof(full_shift(2), constant(1.0))
    assert rep["value"] == 0.0 and rep["class"] == "Psi2"


# SPR ------------------------------------------------------------------------------


def test_spr_renewal():
    ok, info = spr_test(renewal_shift(), zero())
    assert ok
    assert info["margin"] == pytest.approx(LOG2, abs=0.05)


@given(finite_graphs(max_n=5), st.data())
def test_compact_systems_are_spr(g, data):
    ok, info = spr_test(g, table(data.draw(edge_tables(g))))
    assert ok and info["P_inf"] == -math.inf


# semi-continuity -----------------------------------------------------------------


def test_constant_sequence_has_zero_slack():
    mu = renewal_loop_measure([1, 2, 3])
    seq = escape_sequence(None, "constant", {"mu": mu})
    rep = semicontinuity_check(seq, zero(), 0.0, prefix=20)
    assert rep.slack == 0.0


@pytest.fixture(scope="module")
def renewal_pinf():
    return pressure_at_infinity(renewal_shift(), zero()).conservative


def test_single_deep_loops_have_zero_free_energy():
    seq = escape_sequence(renewal_shift(), "deep-loops")
    rep = semicontinuity_check(seq, zero(), 0.0, prefix=40)
    assert rep.lhs == 0.0 and rep.slack == 0.0


def test_wide_deep_loops_respect_bound(renewal_pinf):
    seq = dataclasses.replace(escape_sequence(renewal_shift(), "deep-loops", {"width": 3}), start=100)
    rep = semicontinuity_check(seq, zero(), renewal_pinf, prefix=50)
    assert rep.lhs > 0 and rep.slack >= -1e-9


def test_sharpness_mixture(renewal_pinf):
    # Bernoulli measures on many long loops nearly realise the entropy at infinity
    mu = renewal_loop_measure([1, 2])
    inner = escape_sequence(renewal_shift(), "deep-loops", {"width": 40})
    seq = escape_sequence(None, "convex-combination", {"lam": 0.5, "mu": mu, "inner": inner})
    rep = semicontinuity_check(dataclasses.replace(seq, start=100), zero(), renewal_pinf, prefix=50)
    assert -1e-9 <= rep.slack < 0.05


def test_semicontinuity_argument_checks():
    seq = escape_sequence(None, "constant", {"mu": renewal_loop_measure([1])})
    with pytest.raises(ValueError):
        semicontinuity_check(seq, zero(), 0.0, prefix=5)
    with pytest.raises(ValueError):
        semicontinuity_check(seq, zero(), math.nan)
