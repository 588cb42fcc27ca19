"""Countable Markov shifts through nested finite truncations.

A :class:`CmsSpec` describes an infinite (or finite) alphabet shift by a
decidable transition rule and a truncation scheme. :func:`build_truncation`
turns it into a :class:`TruncatedGraph`, the finite weighted-digraph snapshot
every numerical routine in the package works on.

Built-in families
-----------------
``full``      every transition allowed (finite ``k`` or countable).
``golden``    alphabet {1, 2} with the word 11 forbidden.
``renewal``   1 -> k for every k, k -> k-1 for k >= 2.
``star``      1 -> k and k -> 1 for k >= 2.
``finite``    explicit edge list.
``custom``    user rule, induced subgraph on {1..N}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._numerics import gcd_all


class DegenerateTruncation(ValueError):
    """The truncation has no cycle; grow N."""


@dataclass(frozen=True, eq=False)
class CmsSpec:
    """Shift space given by a transition rule and a truncation scheme.

    Parameters
    ----------
    family : str
        Family tag (``full``, ``golden``, ``renewal``, ``star``, ``finite``,
        ``custom``).
    rule : callable
        ``rule(a, b) -> bool``, True iff the word ``ab`` is admissible.
    alphabet : tuple of int, optional
        Finite alphabet, or ``None`` for the countable alphabet {1, 2, ...}.
    edge_fn : callable, optional
        ``edge_fn(vertices) -> iterable of (a, b)``; fast edge generator used
        instead of evaluating ``rule`` on every pair.
    params : tuple
        Hashable description of the family parameters.
    """

    family: str
    rule: Callable[[int, int], bool]
    alphabet: tuple | None = None
    edge_fn: Callable | None = None
    params: tuple = ()
    name: str = ""

    @property
    def is_finite(self):
        return self.alphabet is not None

    @property
    def complete(self):
        return self.family == "full"

    def truncation_alphabet(self, N=None):
        """Symbols of the N-th truncation (``{1..N}`` by default)."""
        if self.alphabet is not None:
            if N is None:
                return self.alphabet
            return self.alphabet[: max(int(N), 0)]
        if N is None:
            raise ValueError("countable alphabet needs a truncation index N")
        return tuple(range(1, int(N) + 1))

    def edges(self, vertices):
        if self.edge_fn is not None:
            return sorted(set(self.edge_fn(tuple(vertices))))
        vs = list(vertices)
        return [(a, b) for a in vs for b in vs if self.rule(a, b)]

    def level(self, symbol):
        """Height of a symbol in the alphabet enumeration (used by q-thresholds)."""
        return int(symbol)

    def describe(self):
        return {"family": self.family, "params": list(self.params), "name": self.name}

    def __repr__(self):
        p = ", ".join(map(str, self.params))
        return f"CmsSpec({self.family}{'(' + p + ')' if p else ''})"


def full_shift(k=None):
    """Full shift on ``k`` symbols, or on the countable alphabet when ``k`` is None."""
    alphabet = None if k is None else tuple(range(1, k + 1))
    return CmsSpec("full", lambda a, b: True, alphabet=alphabet,
                   edge_fn=lambda vs: itertools.product(vs, vs),
                   params=(k,) if k is not None else (), name=f"full-{k or 'inf'}")


def golden_mean():
    """Golden-mean shift on {1, 2}: the word 11 is forbidden."""
    return CmsSpec("golden", lambda a, b: not (a == 1 and b == 1), alphabet=(1, 2),
                   name="golden-mean")


def _renewal_edges(vs):
    top = max(vs)
    for k in vs:
        yield (1, k)
        if k >= 2 and k - 1 <= top:
            yield (k, k - 1)


def renewal_shift():
    """Renewal shift: one first-return loop at 1 of every length."""
    return CmsSpec("renewal", lambda a, b: a == 1 or b == a - 1,
                   edge_fn=_renewal_edges, name="renewal")


def _star_edges(vs):
    for k in vs:
        if k >= 2:
            yield (1, k)
            yield (k, 1)


def star_shift():
    """Star shift: every symbol other than 1 is joined to 1 in both directions."""
    return CmsSpec("star", lambda a, b: (a == 1) != (b == 1),
                   edge_fn=_star_edges, name="star")


def finite_shift(edges, name="finite"):
    """Subshift of finite type given by an explicit edge list."""
    edges = tuple(sorted({(int(a), int(b)) for a, b in edges}))
    if not edges:
        raise ValueError("empty edge list")
    edge_set = frozenset(edges)
    alphabet = tuple(sorted({s for e in edges for s in e}))
    return CmsSpec("finite", lambda a, b: (a, b) in edge_set, alphabet=alphabet,
                   edge_fn=lambda vs: (e for e in edges if e[0] in vs and e[1] in vs),
                   params=edges, name=name)


def random_finite_shift(rng, n=6, density=0.35, name=None):
    """Random strongly connected graph on ``{1..n}``.

    A Hamiltonian cycle through a random permutation guarantees strong
    connectivity; every other ordered pair (loops included) is added with
    probability ``density``.
    """
    rng = np.random.default_rng(rng)
    perm = [int(v) + 1 for v in rng.permutation(n)]
    edges = {(perm[i], perm[(i + 1) % n]) for i in range(n)}
    mask = rng.random((n, n)) < density
    edges |= {(i + 1, j + 1) for i, j in zip(*np.nonzero(mask))}
    return finite_shift(edges, name=name or f"random-{n}")


def custom_shift(rule, name="custom"):
    """Shift on the countable alphabet with an arbitrary decidable rule."""
    return CmsSpec("custom", rule, name=name)


FAMILIES = {
    "full": full_shift,
    "golden": golden_mean,
    "renewal": renewal_shift,
    "star": star_shift,
    "finite": finite_shift,
}


@dataclass(frozen=True)
class Subdivision:
    """Bookkeeping of :func:`subdivide_edges`."""

    base: "TruncatedGraph"
    roof: dict
    fresh: dict      # fresh symbol -> (a, b, i), 2 <= i <= roof[a, b]
    blocks: dict     # (a, b) -> (a, c_2, ..., c_tau)


@dataclass(frozen=True, eq=False)
class TruncatedGraph:
    """Finite digraph snapshot of a shift.

    ``vertices`` are hashable symbols (ints for base shifts, tuples for
    higher-block recodings). For complete graphs the adjacency matrix is not
    materialised until asked for.
    """

    N: int
    vertices: tuple
    edge_list: tuple | None
    spec: CmsSpec | None = None
    levels: tuple | None = None
    complete: bool = False
    subdivision: Subdivision | None = None
    recoding: int = 1

    @cached_property
    def index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def n(self):
        return len(self.vertices)

    @cached_property
    def level_array(self):
        if self.levels is not None:
            return np.asarray(self.levels, dtype=float)
        if self.spec is not None:
            return np.asarray([self.spec.level(v) for v in self.vertices], dtype=float)
        return np.arange(1, self.n + 1, dtype=float)

    def level(self, v):
        return self.level_array[self.index[v]]

    @cached_property
    def edges(self):
        if self.edge_list is not None:
            return self.edge_list
        return tuple(itertools.product(self.vertices, self.vertices))

    @cached_property
    def edge_arrays(self):
        """``(src, dst)`` integer index arrays, sorted lexicographically."""
        if self.complete and self.edge_list is None:
            n = self.n
            src = np.repeat(np.arange(n), n)
            dst = np.tile(np.arange(n), n)
            return src, dst
        idx = self.index
        src = np.fromiter((idx[a] for a, _ in self.edges), dtype=np.int64, count=len(self.edges))
        dst = np.fromiter((idx[b] for _, b in self.edges), dtype=np.int64, count=len(self.edges))
        order = np.lexsort((dst, src))
        return src[order], dst[order]

    @property
    def n_edges(self):
        return self.n * self.n if (self.complete and self.edge_list is None) else len(self.edges)

    @cached_property
    def adjacency(self):
        """Boolean CSR adjacency matrix."""
        src, dst = self.edge_arrays
        data = np.ones(len(src), dtype=bool)
        return sp.csr_array((data, (src, dst)), shape=(self.n, self.n))

    @cached_property
    def successors(self):
        out = {v: [] for v in self.vertices}
        for a, b in self.edges:
            out[a].append(b)
        return out

    @cached_property
    def predecessors(self):
        out = {v: [] for v in self.vertices}
        for a, b in self.edges:
            out[b].append(a)
        return out

    def has_edge(self, a, b):
        if self.complete and self.edge_list is None:
            return a in self.index and b in self.index
        return b in self.successors.get(a, ())

    @cached_property
    def _components(self):
        if self.complete and self.edge_list is None:
            return np.zeros(self.n, dtype=int), [np.arange(self.n)]
        src, dst = self.edge_arrays
        _, labels = connected_components(self.adjacency, directed=True, connection="strong")
        nontrivial = []
        loops = set(src[src == dst].tolist())
        for lab in np.unique(labels):
            members = np.flatnonzero(labels == lab)
            if len(members) > 1 or (len(members) == 1 and int(members[0]) in loops):
                nontrivial.append(members)
        nontrivial.sort(key=lambda m: int(m.min()))
        return labels, nontrivial

    @cached_property
    def core_indices(self):
        """Indices of the strongly connected core (the nontrivial SCC of the smallest vertex)."""
        _, comps = self._components
        if not comps:
            raise DegenerateTruncation(f"truncation N={self.N} has no cycle")
        return comps[0]

    @property
    def core(self):
        return tuple(self.vertices[i] for i in self.core_indices)

    @property
    def n_cycle_components(self):
        return len(self._components[1])

    @property
    def is_transitive(self):
        try:
            return len(self.core_indices) == self.n and self.n_cycle_components == 1
        except DegenerateTruncation:
            return False

    @cached_property
    def period(self):
        """gcd of cycle lengths in the core (BFS level differences)."""
        core = self.core_indices
        if self.complete and self.edge_list is None:
            return 1
        in_core = np.zeros(self.n, dtype=bool)
        in_core[core] = True
        src, dst = self.edge_arrays
        mask = in_core[src] & in_core[dst]
        s, d = src[mask], dst[mask]
        adj = {}
        for u, v in zip(s.tolist(), d.tolist()):
            adj.setdefault(u, []).append(v)
        root = int(core[0])
        dist = {root: 0}
        frontier = [root]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj.get(u, ()):
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return gcd_all(dist[u] + 1 - dist[v] for u, v in zip(s.tolist(), d.tolist())) or 1

    def core_graph(self):
        """The induced subgraph on the strongly connected core."""
        core = self.core_indices
        if len(core) == self.n:
            return self
        keep = {self.vertices[i] for i in core}
        verts = tuple(v for v in self.vertices if v in keep)
        edges = tuple(e for e in self.edges if e[0] in keep and e[1] in keep)
        levels = tuple(self.level(v) for v in verts)
        return TruncatedGraph(self.N, verts, edges, spec=self.spec, levels=levels,
                              subdivision=self.subdivision, recoding=self.recoding)

    def words(self, length, start=None):
        """All admissible words of a given length (optionally with a fixed first symbol)."""
        firsts = self.vertices if start is None else (start,)
        out = [(v,) for v in firsts]
        for _ in range(length - 1):
            out = [w + (b,) for w in out for b in self.successors[w[-1]]]
        return out

    def words_up_to(self, depth):
        out = []
        for m in range(1, depth + 1):
            out.extend(self.words(m))
        return out

    def is_admissible(self, symbols):
        return all(self.has_edge(a, b) for a, b in zip(symbols, symbols[1:]))

    def __repr__(self):
        fam = self.spec.family if self.spec is not None else "graph"
        return f"TruncatedGraph({fam}, N={self.N}, |V|={self.n}, |E|={self.n_edges})"


@dataclass(frozen=True)
class Word:
    symbols: tuple
    admissible: bool

    def __len__(self):
        return len(self.symbols)


def make_word(target, symbols):
    """Wrap a symbol sequence, recording its admissibility."""
    symbols = tuple(symbols)
    if isinstance(target, CmsSpec):
        ok = all(target.rule(a, b) for a, b in zip(symbols, symbols[1:]))
    else:
        ok = target.is_admissible(symbols)
    return Word(symbols, ok)


def build_truncation(spec, N=None):
    """Induced finite digraph of ``spec`` on its N-th truncation alphabet.

    Raises
    ------
    DegenerateTruncation
        If the truncation carries no cycle.
    """
    if N is not None and N < 1:
        raise ValueError("N must be >= 1")
    verts = spec.truncation_alphabet(N)
    if N is None:
        N = len(verts)
    if spec.complete:
        g = TruncatedGraph(N, tuple(verts), None, spec=spec, complete=True)
    else:
        g = TruncatedGraph(N, tuple(verts), tuple(spec.edges(verts)), spec=spec)
    g.core_indices  # raises on degenerate truncations
    return g


def graph_from_edges(edges, name="finite"):
    """Truncated graph of an explicit edge list (the whole finite shift)."""
    return build_truncation(finite_shift(edges, name=name))


def periodic_count(graph, a, n):
    """Number of period-n points in the cylinder [a]: the (a, a) entry of A^n.

    Exact integer arithmetic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = graph.index
    if a not in idx:
        raise KeyError(a)
    vec = {a: 1}
    for _ in range(n):
        nxt = {}
        for u, c in vec.items():
            for v in graph.successors[u]:
                nxt[v] = nxt.get(v, 0) + c
        vec = nxt
    return vec.get(a, 0)


def higher_block_recode(graph, m):
    """Higher-block presentation on admissible m-words.

    Returns
    -------
    recoded : TruncatedGraph
        Vertices are admissible m-words; ``u -> v`` iff they overlap in m-1 symbols.
    to_base : callable
        Maps a word of the recoding to the base word it encodes (a length-k
        cylinder of the recoding goes to a length m+k-1 cylinder of the base).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return graph, (lambda w: tuple(w))
    verts = tuple(sorted(graph.words(m)))
    by_prefix = {}
    for w in verts:
        by_prefix.setdefault(w[:-1], []).append(w)
    edges = tuple((u, v) for u in verts for v in by_prefix.get(u[1:], ()))
    levels = tuple(graph.level(w[0]) for w in verts)
    recoded = TruncatedGraph(graph.N, verts, edges, spec=graph.spec, levels=levels,
                             recoding=graph.recoding * m if graph.recoding > 1 else m)

    def to_base(word):
        word = tuple(word)
        if not word:
            return ()
        return tuple(word[0]) + tuple(u[-1] for u in word[1:])

    return recoded, to_base


def subdivide_edges(graph, roof):
    """Replace every edge (a, b) by a directed path of ``roof(a, b)`` edges.

    Fresh symbols ``c_i^{a,b}`` (2 <= i <= roof) are numbered after the base
    alphabet in the order of ``(a, b, i)``. Their level is the larger level of
    ``a`` and ``b``.

    Parameters
    ----------
    graph : TruncatedGraph
    roof : Potential of depth <= 2, dict ``{(a, b): int}`` or callable

    Raises
    ------
    ValueError
        If the roof is not a positive integer on some edge.
    """
    if hasattr(roof, "depth") and roof.depth > 2:
        raise ValueError("roof must depend on at most two coordinates")
    tau = {}
    for a, b in graph.edges:
        val = roof[(a, b)] if isinstance(roof, dict) else roof((a, b))
        if not float(val).is_integer() or val < 1:
            raise ValueError(f"roof value {val!r} on edge {(a, b)} is not a positive integer")
        tau[(a, b)] = int(val)
    nxt = max(int(v) for v in graph.vertices) + 1
    fresh, blocks = {}, {}
    edges = []
    for a, b in sorted(tau):
        path = [a]
        for i in range(2, tau[(a, b)] + 1):
            fresh[nxt] = (a, b, i)
            path.append(nxt)
            nxt += 1
        blocks[(a, b)] = tuple(path)
        edges.extend(zip(path, path[1:] + [b]))
    verts = tuple(graph.vertices) + tuple(sorted(fresh))
    levels = tuple(graph.level(v) for v in graph.vertices) + tuple(
        max(graph.level(fresh[s][0]), graph.level(fresh[s][1])) for s in sorted(fresh))
    info = Subdivision(base=graph, roof=tau, fresh=fresh, blocks=blocks)
    return TruncatedGraph(graph.N, verts, tuple(sorted(edges)), spec=None, levels=levels,
                          subdivision=info)


@dataclass(frozen=True)
class RomeVerdict:
    holds: bool
    exact: bool
    longest: float   # longest path outside F, counted in symbols (inf if a cycle avoids F)

    def __bool__(self):
        return self.holds


def _longest_path_outside(graph, F):
    keep = [v for v in graph.vertices if v not in F]
    if not keep:
        return 0.0
    ks = set(keep)
    succ = {v: [w for w in graph.successors[v] if w in ks] for v in keep}
    indeg = {v: 0 for v in keep}
    for v in keep:
        for w in succ[v]:
            indeg[w] += 1
    order = [v for v in keep if indeg[v] == 0]
    longest = {v: 1 for v in keep}
    seen = 0
    while order:
        v = order.pop()
        seen += 1
        for w in succ[v]:
            longest[w] = max(longest[w], longest[v] + 1)
            indeg[w] -= 1
            if indeg[w] == 0:
                order.append(w)
    if seen < len(keep):
        return math.inf
    return float(max(longest.values()))


def uniform_rome_check(target, F, N):
    """Whether ``F`` is a uniform Rome with path bound ``N``.

    True iff every path in the graph avoiding ``F`` has at most ``N`` symbols.
    Finite shifts are decided exactly on the whole graph; the infinite
    built-in families are decided from their rule (``exact=True``); custom
    rules fall back to a truncation and report ``exact=False``.
    """
    F = set(F)
    if isinstance(target, TruncatedGraph):
        exact = target.spec is not None and target.spec.is_finite and target.N >= len(target.spec.alphabet)
        longest = _longest_path_outside(target, F)
        return RomeVerdict(longest <= N, exact, longest)
    spec = target
    if spec.is_finite:
        g = build_truncation(spec)
        longest = _longest_path_outside(g, F)
        return RomeVerdict(longest <= N, True, longest)
    if spec.family in ("full", "renewal"):
        return RomeVerdict(False, True, math.inf)
    if spec.family == "star":
        if 1 in F:
            return RomeVerdict(1 <= N, True, 1.0)
        return RomeVerdict(False, True, math.inf)
    size = max([64] + [int(f) + 16 for f in F])
    g = build_truncation(spec, size)
    longest = _longest_path_outside(g, F)
    return RomeVerdict(longest <= N, False, longest)


@dataclass(frozen=True)
class FPropertyVerdict:
    verdict: str          # "holds-up-to-cap" | "fails"
    exact: bool
    counts: tuple = ()

    @property
    def holds(self):
        return self.verdict != "fails"


def f_property_check(spec, a, n, cap=1000, N_schedule=(8, 16, 32, 64, 128)):
    """Finiteness of the admissible words of length n that start and end with a."""
    if spec.is_finite or spec.family == "renewal":
        return FPropertyVerdict("holds-up-to-cap", True)
    if spec.family == "full":
        return FPropertyVerdict("fails" if n >= 3 else "holds-up-to-cap", True)
    if spec.family == "star":
        if a == 1:
            bad = n >= 3 and n % 2 == 1
        else:
            bad = n >= 5 and n % 2 == 1
        return FPropertyVerdict("fails" if bad else "holds-up-to-cap", True)
    counts = []
    for N in N_schedule:
        if N < a:
            continue
        g = build_truncation(spec, N)
        counts.append(periodic_count(g, a, n - 1) if n >= 2 else 1)
        if len(counts) >= 2 and counts[-1] > cap and counts[-1] > counts[-2]:
            return FPropertyVerdict("fails", False, tuple(counts))
    return FPropertyVerdict("holds-up-to-cap", False, tuple(counts))


DUMP_HEADER = "cms-truncation v1"


def dump_truncation(graph):
    """Canonical text dump: header line, then one sorted ``a b`` edge per line."""
    lines = [DUMP_HEADER]
    lines.extend(f"{a} {b}" for a, b in sorted(graph.edges))
    return "\n".join(lines) + "\n"


def load_truncation(text):
    """Inverse of :func:`dump_truncation` (integer symbols)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != DUMP_HEADER:
        raise ValueError("missing cms-truncation header")
    edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    return graph_from_edges(edges)
