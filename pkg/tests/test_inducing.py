import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo import (
    build_induced, build_truncation, discriminant, edge, full_shift, induced_pressure_curve,
    renewal_shift, spectral_pressure, spr_certificate_induced, star_shift, table, zero,
)

from strategies import edge_tables, finite_graphs

LOG2 = math.log(2)


def star_potential():
    return edge(lambda a, b: -1.5 * math.log(max(a, b)))


def test_full_shift_return_words():
    ind = build_induced(build_truncation(full_shift(2)), zero(), a=1, L=4)
    assert set(ind.words) == {(1,), (1, 2), (1, 2, 2), (1, 2, 2, 2)}
    assert sorted(ind.tau.tolist()) == [1, 2, 3, 4]


def test_renewal_one_word_per_length():
    ind = build_induced(renewal_shift(), zero(), a=1, L=8)
    assert sorted(ind.tau.tolist()) == list(range(1, 9))
    assert (1, 4, 3, 2) in ind.words


def test_star_return_words():
    ind = build_induced(star_shift(), zero(), a=1, L=6, N=6)
    assert set(ind.words) == {(1, k) for k in range(2, 7)}
    assert set(ind.tau.tolist()) == {2.0}


def test_full_shift_curve():
    ind = build_induced(build_truncation(full_shift(2)), zero(), a=1)
    for t in (-3.0, -1.0, -0.2):
        ref = math.log(math.exp(t) + math.exp(2 * t) / (1 - math.exp(t)))
        assert induced_pressure_curve(ind, t) == pytest.approx(ref, abs=1e-12)
    assert induced_pressure_curve(ind, 0.0) == math.inf


def test_renewal_curve():
    ind = build_induced(renewal_shift(), zero(), a=1)
    for t in (-2.0, -0.5, -0.01):
        assert induced_pressure_curve(ind, t) == pytest.approx(math.log(math.exp(t) / -math.expm1(t)),
                                                               abs=1e-9)
    assert induced_pressure_curve(ind, 0.0) == math.inf


def test_discriminant_full_shift():
    rep = discriminant(build_induced(build_truncation(full_shift(2)), zero(), a=1))
    assert rep.p_star == pytest.approx(0.0, abs=1e-12)
    assert rep.delta == math.inf
    assert rep.root == pytest.approx(-LOG2, abs=1e-12)
    assert rep.implied_pressure == pytest.approx(LOG2, abs=1e-12)
    assert rep.classification == "SPR"


def test_discriminant_renewal():
    rep = discriminant(build_induced(renewal_shift(), zero(), a=1))
    assert rep.p_star == pytest.approx(0.0, abs=1e-12)
    assert rep.implied_pressure == pytest.approx(LOG2, abs=1e-10)


def test_discriminant_star_matches_spectral():
    phi = star_potential()
    rep = discriminant(build_induced(star_shift(), phi, a=1))
    # every return word has tau = 2, so the induced series converges for all t
    assert rep.p_star == math.inf and rep.delta == math.inf
    assert rep.classification == "SPR"
    spec = spectral_pressure(build_truncation(star_shift(), 1000), phi).value
    assert rep.implied_pressure == pytest.approx(spec, abs=1e-3)


def test_spr_certificates():
    assert spr_certificate_induced(build_truncation(full_shift(2)), zero())[0] is True
    assert spr_certificate_induced(renewal_shift(), zero())[0] is True
    assert spr_certificate_induced(star_shift(), star_potential())[0] is True


def test_depth_three_rejected():
    from cmsthermo import indicator
    with pytest.raises(ValueError):
        build_induced(build_truncation(full_shift(2)), indicator((1, 2, 1)))


@given(finite_graphs(max_n=5), st.data())
def test_implied_pressure_matches_spectral(g, data):
    """Finite graphs are SPR and the induced root recovers the spectral pressure."""
    vals = data.draw(edge_tables(g))
    phi = table(vals)
    for a in g.vertices[:2]:
        rep = discriminant(build_induced(g, phi, a=a))
        assert rep.classification == "SPR"
        assert rep.implied_pressure == pytest.approx(spectral_pressure(g, phi).value, abs=1e-8)


@given(finite_graphs(max_n=4), st.data())
def test_curve_dominates_census_sums(g, data):
    """Census sums over return words of length <= L increase to the curve value."""
    vals = data.draw(edge_tables(g, -1.0, 1.0))
    phi = table(vals)
    a = g.vertices[0]
    t = min(build_induced(g, phi, a=a).p_star(), 5.0) - 1.0
    sums = []
    for L in (3, 5, 7):
        ind = build_induced(g, phi, a=a, L=L)
        sums.append(np.logaddexp.reduce(ind.phibar + t * ind.tau) if len(ind.words) else -math.inf)
    curve = induced_pressure_curve(ind, t)
    assert sums[0] <= sums[1] + 1e-12 <= sums[2] + 2e-12
    assert sums[2] <= curve + 1e-9
