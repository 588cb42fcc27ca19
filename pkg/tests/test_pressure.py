import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo import (
    build_truncation, classify_recurrence, constant, edge, first_return_sum, full_shift,
    golden_mean, graph_from_edges, gurevich_estimate, indicator, linear_law, log_law,
    partition_sum, periodic_count, pressure_limit, renewal_shift, spectral_pressure, star_shift,
    table, variational_check, zero,
)

from strategies import edge_tables, finite_graphs

LOG2 = math.log(2)
GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def closed_words(g, a, n):
    for mid in itertools.product(g.vertices, repeat=n - 1):
        w = (a,) + mid
        if all(g.has_edge(x, y) for x, y in zip(w, w[1:] + (a,))):
            yield w


def brute_partition(g, phi, a, n, first_return=False):
    total = 0.0
    for w in closed_words(g, a, n):
        if first_return and a in w[1:]:
            continue
        total += math.exp(phi.birkhoff(w))
    return total


def dense_pressure(g, vals):
    M = np.zeros((g.n, g.n))
    for (x, y), v in vals.items():
        M[g.index[x], g.index[y]] = math.exp(v)
    return math.log(max(abs(np.linalg.eigvals(M))))


# partition sums -----------------------------------------------------------------


def test_partition_sum_examples():
    full2 = build_truncation(full_shift(2))
    assert partition_sum(full2, zero(), 1, 3) == pytest.approx(4)
    assert partition_sum(full2, linear_law(LOG2), 1, 1) == pytest.approx(0.5)
    assert partition_sum(build_truncation(golden_mean()), zero(), 2, 4) == pytest.approx(5)


def test_first_return_examples():
    full2 = build_truncation(full_shift(2))
    golden = build_truncation(golden_mean())
    assert first_return_sum(full2, zero(), 1, 2) == pytest.approx(1)
    assert first_return_sum(full2, indicator((1,)), 1, 1) == pytest.approx(math.e)
    assert first_return_sum(golden, zero(), 1, 1) == 0.0
    assert first_return_sum(golden, zero(), 1, 2) == pytest.approx(1)


@given(finite_graphs(max_n=4), st.data(), st.integers(1, 5))
def test_partition_sums_match_enumeration(g, data, n):
    vals = data.draw(edge_tables(g))
    phi = table(vals)
    a = g.vertices[0]
    assert partition_sum(g, phi, a, n) == pytest.approx(brute_partition(g, phi, a, n), rel=1e-10, abs=1e-300)
    assert first_return_sum(g, phi, a, n) == pytest.approx(
        brute_partition(g, phi, a, n, first_return=True), rel=1e-10, abs=1e-300)


@given(finite_graphs(max_n=5), st.integers(1, 30))
def test_zero_potential_counts_periodic_points(g, n):
    a = g.vertices[-1]
    assert partition_sum(g, zero(), a, n) == pytest.approx(periodic_count(g, a, n), rel=1e-12)


# spectral pressure -----------------------------------------------------------


def test_spectral_examples():
    assert spectral_pressure(build_truncation(full_shift(2)), zero()).value == pytest.approx(LOG2, abs=1e-14)
    assert spectral_pressure(build_truncation(golden_mean()), zero()).value == pytest.approx(GOLDEN, abs=1e-13)


def test_spectral_partial_zeta():
    g = build_truncation(full_shift(), 10_000)
    ref = math.log(sum(i ** -2.0 for i in range(1, 10_001)))
    assert spectral_pressure(g, log_law(2.0)).value == pytest.approx(ref, abs=1e-12)


@given(finite_graphs(max_n=6), st.data())
def test_spectral_matches_dense_eigenvalues(g, data):
    vals = data.draw(edge_tables(g, -5.0, 5.0))
    rep = spectral_pressure(g, table(vals))
    assert rep.value == pytest.approx(dense_pressure(g, vals), abs=1e-9)


@given(finite_graphs(max_n=5), st.data(), st.floats(-30, 30))
def test_pressure_shifts_with_constants(g, data, c):
    vals = data.draw(edge_tables(g))
    p0 = spectral_pressure(g, table(vals)).value
    assert spectral_pressure(g, table(vals) + c).value == pytest.approx(p0 + c, abs=1e-9)


@given(finite_graphs(max_n=5), st.data())
def test_pressure_ignores_coboundaries(g, data):
    vals = data.draw(edge_tables(g))
    u = {v: data.draw(st.floats(-3, 3)) for v in g.vertices}
    cob = table({(x, y): vals[(x, y)] + u[x] - u[y] for (x, y) in g.edges})
    assert spectral_pressure(g, cob).value == pytest.approx(spectral_pressure(g, table(vals)).value, abs=1e-9)


@given(finite_graphs(max_n=5), st.data())
def test_rpf_measure_is_equilibrium(g, data):
    vals = data.draw(edge_tables(g))
    phi = table(vals)
    rep = spectral_pressure(g, phi)
    mu = rep.rpf.measure
    assert mu.free_energy(phi) == pytest.approx(rep.value, abs=1e-9)


def test_extreme_weights_keep_precision():
    # edge weights spanning hundreds of orders of magnitude
    g = build_truncation(star_shift(), 60)
    for t in (-50.0, 50.0):
        phi = edge(lambda a, b: -1.5 * math.log(max(a, b))) * t
        rep = spectral_pressure(g, phi)
        assert rep.diagnostics["converged"]
        assert rep.rpf.measure.free_energy(phi) == pytest.approx(rep.value, abs=1e-8)


def test_depth_three_potential_is_recoded():
    g = build_truncation(full_shift(2))
    phi = indicator((1, 2, 1))
    rep = spectral_pressure(g, phi)
    # words avoiding 121 get weight 1, the others e
    A = np.zeros((4, 4))
    blocks = [(1, 1), (1, 2), (2, 1), (2, 2)]
    for i, u in enumerate(blocks):
        for j, v in enumerate(blocks):
            if u[1] == v[0]:
                A[i, j] = math.e if u + (v[1],) == (1, 2, 1) else 1.0
    assert rep.value == pytest.approx(math.log(max(abs(np.linalg.eigvals(A)))), abs=1e-12)


def test_variational_principle_sampling():
    g = build_truncation(golden_mean())
    rep = variational_check(g, indicator((1,)), n_measures=200, rng=1)
    assert rep.worst_excess <= 1e-10
    assert rep.equilibrium_gap < 1e-12


# limits and estimates -----------------------------------------------------------


def test_gurevich_estimates():
    rep = gurevich_estimate(build_truncation(full_shift(2)), zero(), a=1, n_max=40)
    assert rep.estimate == pytest.approx(LOG2, abs=1e-6)
    rep = gurevich_estimate(build_truncation(golden_mean()), zero(), a=1, n_max=60)
    assert rep.estimate == pytest.approx(GOLDEN, abs=1e-3)
    rep = gurevich_estimate(renewal_shift(), zero(), a=1, N_schedule=(40,))
    assert rep.estimate == pytest.approx(LOG2, abs=1e-3)


def test_pressure_limit_closed_forms():
    assert pressure_limit(full_shift(), linear_law(LOG2)).value == pytest.approx(0.0, abs=1e-6)
    assert pressure_limit(full_shift(), log_law(0.5)).verdict == "divergent"
    assert pressure_limit(full_shift(), zero()).verdict == "divergent"
    rep = pressure_limit(full_shift(), log_law(2.0))
    assert rep.value == pytest.approx(math.log(math.pi ** 2 / 6), abs=1e-3)


def test_pressure_limit_renewal():
    rep = pressure_limit(renewal_shift(), zero())
    assert rep.verdict == "finite"
    assert rep.value == pytest.approx(LOG2, abs=1e-3)


def test_recurrence_classification():
    assert classify_recurrence(build_truncation(full_shift(2)), zero()).verdict == "positive-recurrent"
    assert classify_recurrence(full_shift(2), zero()).verdict == "positive-recurrent"
    g = graph_from_edges([(1, 2), (2, 3), (3, 1), (3, 3)])
    assert classify_recurrence(g, edge(lambda a, b: a - 2.0 * b)).verdict == "positive-recurrent"
    assert classify_recurrence(renewal_shift(), zero()).verdict == "positive-recurrent"


def test_harmonic_boundary_is_divergent():
    # a(i) = -log i: the declared law sits exactly on the divergent boundary
    assert pressure_limit(full_shift(), log_law(1.0)).verdict == "divergent"


def test_superlinear_loop_sums():
    # renewal loops with a(i) = +log i weigh k!, so no exponential rate tames them
    rep = pressure_limit(renewal_shift(), log_law(-1.0))
    assert rep.verdict == "divergent"
    # with a(i) = -log i they weigh 1/k! and the pressure is finite at every scale
    rep = pressure_limit(renewal_shift(), log_law(1.0))
    assert rep.verdict == "finite"
    spectral = spectral_pressure(build_truncation(renewal_shift(), 60), log_law(1.0)).value
    assert rep.value == pytest.approx(spectral, abs=1e-9)
