import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo import (
    DegenerateTruncation, build_truncation, dump_truncation, f_property_check, full_shift,
    golden_mean, graph_from_edges, higher_block_recode, load_truncation, periodic_count,
    renewal_shift, star_shift, subdivide_edges, uniform_rome_check,
)
from cmsthermo.potentials import constant, edge

from strategies import finite_graphs


def brute_closed_walks(graph, a, n):
    """Closed walks a -> ... -> a of n steps, by enumerating every symbol sequence."""
    verts = graph.vertices
    count = 0
    for mid in itertools.product(verts, repeat=n - 1):
        w = (a,) + mid + (a,)
        if all(graph.has_edge(x, y) for x, y in zip(w, w[1:])):
            count += 1
    return count


# truncations ---------------------------------------------------------------------


def test_full_two_shift_truncation():
    g = build_truncation(full_shift(2))
    assert g.adjacency.toarray().astype(int).tolist() == [[1, 1], [1, 1]]
    assert g.period == 1


def test_golden_mean_forbids_11():
    g = build_truncation(golden_mean())
    assert set(g.edges) == {(1, 2), (2, 1), (2, 2)}
    assert g.period == 1
    assert set(g.core) == {1, 2}


def test_renewal_rule_expansion():
    g = build_truncation(renewal_shift(), 5)
    expected = {(1, k) for k in range(1, 6)} | {(k, k - 1) for k in range(2, 6)}
    assert set(g.edges) == expected
    assert g.period == 1


def test_star_truncation_edges():
    g = build_truncation(star_shift(), 4)
    assert set(g.edges) == {(1, k) for k in (2, 3, 4)} | {(k, 1) for k in (2, 3, 4)}
    assert not g.has_edge(2, 3)


def test_degenerate_truncation_raises():
    with pytest.raises(DegenerateTruncation):
        graph_from_edges([(1, 2)])


def test_bad_truncation_index():
    with pytest.raises(ValueError):
        build_truncation(renewal_shift(), 0)


# periodic counts -------------------------------------------------------------


def test_periodic_count_examples():
    assert periodic_count(build_truncation(full_shift(2)), 1, 3) == 4
    # symbol 2 carries the loop in the forbid-11 labelling
    assert periodic_count(build_truncation(golden_mean()), 2, 4) == 5
    assert periodic_count(build_truncation(golden_mean()), 1, 4) == 2
    assert periodic_count(graph_from_edges([(1, 2), (2, 1)]), 1, 3) == 0


@given(finite_graphs(max_n=4), st.integers(1, 5))
def test_periodic_count_matches_enumeration(g, n):
    a = g.vertices[0]
    assert periodic_count(g, a, n) == brute_closed_walks(g, a, n)


@given(finite_graphs(max_n=5), st.integers(1, 12))
def test_periodic_count_matches_matrix_power(g, n):
    A = g.adjacency.toarray().astype(object)
    M = np.linalg.matrix_power(A, n)
    for a in g.vertices:
        i = g.index[a]
        assert periodic_count(g, a, n) == M[i, i]


def test_periodic_count_is_exact_for_large_n():
    # 2^200 does not fit a float mantissa
    g = build_truncation(full_shift(2))
    assert periodic_count(g, 1, 200) == 2 ** 199


# recoding --------------------------------------------------------------------------


def test_recode_full_two_shift():
    g2, _ = higher_block_recode(build_truncation(full_shift(2)), 2)
    assert g2.n == 4 and len(g2.edges) == 8


def test_recode_golden_mean():
    g2, to_base = higher_block_recode(build_truncation(golden_mean()), 2)
    assert set(g2.vertices) == {(1, 2), (2, 1), (2, 2)}
    assert set(g2.edges) == {((1, 2), (2, 1)), ((1, 2), (2, 2)), ((2, 1), (1, 2)),
                             ((2, 2), (2, 1)), ((2, 2), (2, 2))}
    assert to_base([(1, 2), (2, 2), (2, 1)]) == (1, 2, 2, 1)


def test_recode_identity():
    g = build_truncation(golden_mean())
    g1, to_base = higher_block_recode(g, 1)
    assert g1 is g
    assert to_base((1, 2)) == (1, 2)


@given(finite_graphs(max_n=4), st.integers(2, 3), st.integers(1, 6))
def test_recoding_preserves_periodic_points(g, m, n):
    """Period-n points through [a] correspond to period-n points through the blocks starting with a."""
    gm, _ = higher_block_recode(g, m)
    for a in g.vertices:
        lifted = sum(periodic_count(gm, w, n) for w in gm.vertices if w[0] == a)
        assert lifted == periodic_count(g, a, n)


# subdivision -----------------------------------------------------------------------


def test_subdivide_constant_one_is_identity():
    g = build_truncation(golden_mean())
    s = subdivide_edges(g, constant(1))
    assert s.vertices == g.vertices and set(s.edges) == set(g.edges)


def test_subdivide_full_two_shift_roof_two():
    s = subdivide_edges(build_truncation(full_shift(2)), constant(2))
    assert s.n == 6 and len(s.edges) == 8


def test_subdivide_renewal_example():
    g = build_truncation(renewal_shift(), 3)
    tau = edge(lambda a, b: b if a == 1 else 1)
    s = subdivide_edges(g, tau)
    assert s.n == 6
    # the fresh symbols of edge (a, b) are numbered in (a, b, i) order
    assert s.subdivision.blocks[(1, 3)] == (1, 5, 6)


def test_subdivide_rejects_non_integer_roof():
    g = build_truncation(full_shift(2))
    with pytest.raises(ValueError):
        subdivide_edges(g, constant(1.5))
    with pytest.raises(ValueError):
        subdivide_edges(g, constant(0))


@given(finite_graphs(max_n=4), st.data())
def test_subdivision_cycle_lengths(g, data):
    """A base cycle of length n and roof sum T becomes a cycle of length T."""
    roof = {e: data.draw(st.integers(1, 3)) for e in g.edges}
    s = subdivide_edges(g, roof)
    assert s.n == g.n + sum(r - 1 for r in roof.values())
    assert len(s.edges) == sum(roof.values())
    a = g.vertices[0]
    # closed walks of total roof T through a in the base = closed walks of length T in the subdivision
    for T in range(1, 7):
        base = 0
        for n in range(1, T + 1):
            for mid in itertools.product(g.vertices, repeat=n - 1):
                w = (a,) + mid + (a,)
                if all(g.has_edge(x, y) for x, y in zip(w, w[1:])) and \
                        sum(roof[(x, y)] for x, y in zip(w, w[1:])) == T:
                    base += 1
        assert periodic_count(s, a, T) == base


# Rome and F-property ---------------------------------------------------------


def test_uniform_rome_examples():
    assert uniform_rome_check(star_shift(), {1}, 1).holds
    assert uniform_rome_check(star_shift(), {1}, 1).exact
    assert not uniform_rome_check(renewal_shift(), {1, 2, 3}, 100).holds
    g = build_truncation(golden_mean())
    assert uniform_rome_check(g, set(g.vertices), 0).holds


@given(finite_graphs(max_n=5), st.data())
def test_rome_longest_path_by_enumeration(g, data):
    F = set(data.draw(st.lists(st.sampled_from(g.vertices), unique=True)))
    v = uniform_rome_check(g, F, 3)
    rest = [x for x in g.vertices if x not in F]
    # longest path avoiding F, by DFS (inf when a cycle avoids F)
    best = 0

    def dfs(x, seen):
        nonlocal best
        best = max(best, len(seen))
        for y in g.successors[x]:
            if y in F:
                continue
            if y in seen:
                best = math.inf
                continue
            dfs(y, seen | {y})

    for x in rest:
        dfs(x, {x})
    assert v.longest == best
    assert v.holds == (best <= 3)


def test_f_property_examples():
    assert f_property_check(star_shift(), 1, 3).verdict == "fails"
    assert f_property_check(renewal_shift(), 1, 7).holds
    assert f_property_check(golden_mean(), 1, 4).holds


# dumps -----------------------------------------------------------------------


def test_dump_golden_mean():
    assert dump_truncation(build_truncation(golden_mean())) == "cms-truncation v1\n1 2\n2 1\n2 2\n"


@given(finite_graphs())
def test_dump_round_trip(g):
    text = dump_truncation(g)
    assert dump_truncation(load_truncation(text)) == text


def test_load_rejects_missing_header():
    with pytest.raises(ValueError):
        load_truncation("1 2\n2 1\n")
