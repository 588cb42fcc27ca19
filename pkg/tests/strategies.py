"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from cmsthermo import build_truncation, random_finite_shift


@st.composite
def finite_graphs(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.floats(0.0, 0.8))
    return build_truncation(random_finite_shift(np.random.default_rng(seed), n=n, density=density))


@st.composite
def edge_tables(draw, graph, lo=-3.0, hi=3.0):
    vals = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=len(graph.edges),
                         max_size=len(graph.edges)))
    return dict(zip(sorted(graph.edges), vals))
