import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo._numerics import (
    aitken, fit_tail_law, karp_max_mean, log_sum, longest_potentials, perron_root, stationary_gth,
    stationary_sparse,
)

from strategies import edge_tables, finite_graphs


def simple_cycles(g):
    """All simple cycles of a small graph, as vertex tuples starting at their minimum."""
    out = []
    verts = sorted(g.vertices)

    def dfs(start, path):
        for y in g.successors[path[-1]]:
            if y == start:
                out.append(tuple(path))
            elif y > start and y not in path:
                dfs(start, path + [y])

    for s in verts:
        dfs(s, [s])
    return out


@given(finite_graphs(max_n=5), st.data())
def test_karp_matches_cycle_enumeration(g, data):
    vals = data.draw(edge_tables(g))
    src, dst = g.edge_arrays
    w = np.array([vals[(g.vertices[i], g.vertices[j])] for i, j in zip(src, dst)])
    best = max(sum(vals[(c[i], c[(i + 1) % len(c)])] for i in range(len(c))) / len(c)
               for c in simple_cycles(g))
    assert karp_max_mean(g.n, src, dst, w) == pytest.approx(best, abs=1e-9)


@given(finite_graphs(max_n=6), st.data())
def test_longest_potentials_are_feasible(g, data):
    """``p(v) >= p(u) + w(u, v) - lam`` with a tight edge out of every vertex."""
    vals = data.draw(edge_tables(g))
    src, dst = g.edge_arrays
    w = np.array([vals[(g.vertices[i], g.vertices[j])] for i, j in zip(src, dst)])
    lam = karp_max_mean(g.n, src, dst, w)
    p = longest_potentials(g.n, src, dst, w, lam)
    red = p[src] + w - lam - p[dst]
    assert red.max() <= 1e-9


@given(st.integers(1, 8), st.integers(0, 2**31))
def test_stationary_gth_against_linear_solve(n, seed):
    rng = np.random.default_rng(seed)
    P = rng.random((n, n)) + 0.01
    P /= P.sum(axis=1, keepdims=True)
    pi = stationary_gth(P)
    assert pi.sum() == pytest.approx(1.0)
    assert np.allclose(pi @ P, pi, atol=1e-13)
    assert np.allclose(stationary_sparse(P), pi, atol=1e-10)


def test_perron_root_of_golden_matrix():
    A = np.array([[0.0, 1.0], [1.0, 1.0]])
    rho, v = perron_root(lambda x: A @ x, 2)[:2]
    assert rho == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)
    assert np.all(np.asarray(v) > 0)


@given(st.lists(st.floats(-700, 700), min_size=1, max_size=30))
def test_log_sum_is_stable(xs):
    ref = max(xs) + math.log(sum(math.exp(x - max(xs)) for x in xs))
    assert log_sum(np.array(xs)) == pytest.approx(ref, abs=1e-12)


def test_log_sum_of_empty_is_minus_inf():
    assert log_sum(np.array([])) == -math.inf


def test_aitken_accelerates_geometric_convergence():
    seq = [1.0 + 0.5 ** k for k in range(1, 12)]
    value, residual = aitken(seq)
    assert abs(value - 1.0) < 1e-10
    assert residual < 1e-3


def test_fit_tail_law_recovers_coefficients():
    ks = np.arange(10, 200, dtype=float)
    vals = -0.3 * ks - 1.5 * np.log(ks) + 2.0
    alpha, beta, c = fit_tail_law(ks, vals)[:3]
    assert (alpha, beta, c) == pytest.approx((-0.3, -1.5, 2.0), abs=1e-8)
