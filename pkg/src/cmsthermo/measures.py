"""Stationary Markov measures, cylinder vectors and measure correspondences.

Everything here is exact arithmetic on finite chains: the measures live on
truncations, and the "countable" behaviour (escape of mass, convergence on
cylinders) is observed along sequences of truncations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ._numerics import stationary_gth, stationary_sparse
from .shifts import TruncatedGraph, build_truncation, renewal_shift

STOCH_TOL = 1e-12
GTH_MAX = 1000


class MeasureError(ValueError):
    pass


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary order-m Markov measure.

    States are admissible m-words (tuples); ``P[i, j] > 0`` only when state
    ``j`` is state ``i`` shifted by one symbol. Build through
    :meth:`from_transitions` unless the stationary vector is already known.
    """

    order: int
    states: tuple
    P: sp.csr_array
    pi: np.ndarray
    graph: TruncatedGraph | None = None
    label: str = ""

    def __post_init__(self):
        P = self.P
        rows = np.asarray(P.sum(axis=1)).ravel()
        if np.abs(rows - 1.0).max(initial=0.0) > STOCH_TOL:
            raise MeasureError("transition matrix is not row-stochastic")
        if abs(self.pi.sum() - 1.0) > STOCH_TOL or (self.pi < -STOCH_TOL).any():
            raise MeasureError("stationary vector is not a probability vector")
        if np.abs(P.T @ self.pi - self.pi).max(initial=0.0) > STOCH_TOL:
            raise MeasureError("vector is not stationary for P")
        coo = P.tocoo()
        for i, j in zip(coo.row.tolist(), coo.col.tolist()):
            u, v = self.states[i], self.states[j]
            if u[1:] != v[:-1] or (self.graph is not None and not self.graph.has_edge(u[-1], v[-1])):
                raise MeasureError(f"transition {u} -> {v} is not admissible")

    @classmethod
    def from_transitions(cls, states, P, order=None, graph=None, label=""):
        """Measure of the chain ``P`` on ``states``; the stationary vector is solved for."""
        states = tuple(tuple(s) for s in states)
        order = len(states[0]) if order is None else order
        P = sp.csr_array(P, dtype=float)
        rows = np.asarray(P.sum(axis=1)).ravel()
        P = sp.csr_array(sp.diags(1.0 / rows) @ P)
        if len(states) <= GTH_MAX:
            pi = stationary_gth(P.toarray())
        else:
            pi = stationary_sparse(P)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        return cls(order, states, P, pi, graph=graph, label=label)

    @property
    def n_states(self):
        return len(self.states)

    @property
    def index(self):
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.states)}
            object.__setattr__(self, "_index", idx)
        return idx

    def _coo(self):
        c = self.__dict__.get("_coo_cache")
        if c is None:
            coo = self.P.tocoo()
            c = (coo.row, coo.col, coo.data)
            object.__setattr__(self, "_coo_cache", c)
        return c

    # basic functionals ---------------------------------------------------------

    def entropy(self):
        """Kolmogorov-Sinai entropy in nats."""
        r, _, p = self._coo()
        return float(-(self.pi[r] * _xlogx(p)).sum())

    def integrate(self, phi):
        """``int phi dmu`` for a potential of depth at most ``order + 1``."""
        if phi.depth > self.order + 1:
            raise MeasureError(f"potential depth {phi.depth} exceeds order+1 = {self.order + 1}; lift the measure")
        if phi.constant is not None:
            return float(phi.constant)
        r, c, p = self._coo()
        w = self.pi[r] * p
        if self.order == 1 and self.graph is not None:
            gi = self.graph.index
            src = np.fromiter((gi[self.states[i][0]] for i in r.tolist()), dtype=np.int64, count=len(r))
            dst = np.fromiter((gi[self.states[j][0]] for j in c.tolist()), dtype=np.int64, count=len(c))
            vals = phi.values_at(self.graph, src, dst)
        else:
            k = phi.depth
            vals = np.array([phi((self.states[i] + (self.states[j][-1],))[:k])
                             for i, j in zip(r.tolist(), c.tolist())])
        return float(w @ vals)

    def free_energy(self, phi):
        return self.entropy() + self.integrate(phi)

    def cylinder_mass(self, word):
        word = tuple(word)
        m = self.order
        if not word:
            return 1.0
        if len(word) < m:
            return float(sum(self.pi[i] for i, s in enumerate(self.states) if s[: len(word)] == word))
        idx = self.index
        i = idx.get(word[:m])
        if i is None:
            return 0.0
        mass = self.pi[i]
        for t in range(1, len(word) - m + 1):
            j = idx.get(word[t:t + m])
            if j is None:
                return 0.0
            mass *= self.P[i, j]
            if mass == 0.0:
                return 0.0
            i = j
        return float(mass)

    def symbol_masses(self):
        out = {}
        for s, p in zip(self.states, self.pi):
            out[s[0]] = out.get(s[0], 0.0) + float(p)
        return out

    def level_of(self, symbol):
        if self.graph is not None and symbol in self.graph.index:
            return float(self.graph.level(symbol))
        return float(symbol)

    def tail_mass(self, k):
        """``mu(union of [s] over symbols s of level >= k)``."""
        return float(sum(p for s, p in self.symbol_masses().items() if self.level_of(s) >= k))

    def successors(self, i):
        row = self.P[[i], :].tocoo()
        return list(zip(row.col.tolist(), row.data.tolist()))

    # transformations -------------------------------------------------------------

    def lift(self, order):
        """Same measure written as an order-``order`` chain on its support words."""
        if order < self.order:
            raise MeasureError("cannot lower the order of a Markov measure")
        if order == self.order:
            return self
        m = self.order
        words = {s: float(self.pi[i]) for i, s in enumerate(self.states) if self.pi[i] > 0}
        r, c, p = self._coo()
        trans = {}
        for i, j, pr in zip(r.tolist(), c.tolist(), p.tolist()):
            trans.setdefault(self.states[i], []).append((self.states[j][-1], pr))
        for _ in range(order - m):
            nxt = {}
            for w, mass in words.items():
                for b, pr in trans.get(w[-m:], ()):
                    if pr > 0:
                        nxt[w + (b,)] = mass * pr
            words = nxt
        states = tuple(sorted(words))
        index = {s: i for i, s in enumerate(states)}
        rows, cols, vals = [], [], []
        for w in states:
            for b, pr in trans.get(w[-m:], ()):
                v = w[1:] + (b,)
                if pr > 0 and v in index:
                    rows.append(index[w])
                    cols.append(index[v])
                    vals.append(pr)
        n = len(states)
        P = sp.csr_array((vals, (rows, cols)), shape=(n, n))
        pi = np.array([words[s] for s in states])
        return MarkovMeasure(order, states, P, pi / pi.sum(), graph=self.graph, label=self.label)

    def cylinder_vector(self, depth, scale=1.0):
        """Masses of every positive-mass cylinder of length <= depth."""
        entries = {}
        m = self.order
        r, c, p = self._coo()
        trans = {}
        for i, j, pr in zip(r.tolist(), c.tolist(), p.tolist()):
            trans.setdefault(i, []).append((j, pr))
        # words shorter than the order come from the stationary vector directly
        for i, s in enumerate(self.states):
            if self.pi[i] <= 0:
                continue
            for L in range(1, min(m, depth) + 1):
                entries[s[:L]] = entries.get(s[:L], 0.0) + scale * float(self.pi[i])
        if depth > m:
            frontier = [(s, i, float(self.pi[i])) for i, s in enumerate(self.states) if self.pi[i] > 0]
            for _ in range(depth - m):
                nxt = []
                for w, i, mass in frontier:
                    for j, pr in trans.get(i, ()):
                        w2 = w + (self.states[j][-1],)
                        mm = mass * pr
                        entries[w2] = entries.get(w2, 0.0) + scale * mm
                        nxt.append((w2, j, mm))
                frontier = nxt
        return CylinderVector(depth, entries, scale)

    def to_dict(self):
        P = self.P.toarray()
        return {"order": self.order, "states": [list(s) for s in self.states],
                "P": P.tolist(), "pi": self.pi.tolist()}

    def __repr__(self):
        return f"MarkovMeasure(order={self.order}, states={self.n_states}{', ' + self.label if self.label else ''})"


def _order1(graph, probs, label=""):
    """Order-1 measure from a dict ``{(a, b): P(a, b)}`` (rows renormalised)."""
    verts = sorted({a for a, _ in probs} | {b for _, b in probs}, key=_sort_key)
    index = {v: i for i, v in enumerate(verts)}
    rows = [index[a] for a, b in probs]
    cols = [index[b] for a, b in probs]
    vals = [float(probs[e]) for e in probs]
    n = len(verts)
    P = sp.csr_array((vals, (rows, cols)), shape=(n, n))
    P.eliminate_zeros()
    return MarkovMeasure.from_transitions([(v,) for v in verts], P, order=1, graph=graph, label=label)


def _sort_key(v):
    return (0, v) if isinstance(v, (int, np.integer)) else (1, tuple(v) if isinstance(v, tuple) else (v,))


def markov_from_matrix(graph, P, label=""):
    """Order-1 measure on the vertices of ``graph`` from a dense or sparse matrix."""
    P = sp.coo_array(P)
    probs = {(graph.vertices[i], graph.vertices[j]): v for i, j, v in zip(P.row, P.col, P.data) if v > 0}
    return _order1(graph, probs, label)


def bernoulli(graph, weights, label="bernoulli"):
    """Bernoulli measure ``P(a, b) = p_b`` (restricted to admissible edges and renormalised)."""
    weights = {k: float(v) for k, v in dict(weights).items()}
    probs = {(a, b): weights.get(b, 0.0) for a, b in graph.edges if weights.get(b, 0.0) > 0
             and weights.get(a, 0.0) > 0}
    return _order1(graph, probs, label)


def _primitive_root(word):
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


def periodic_measure(graph, cycle, label=None):
    """Uniform measure on the periodic orbit ``(cycle)^infinity``.

    The chain order is the smallest ``m`` at which the cyclic m-windows of the
    primitive cycle word are pairwise distinct.
    """
    cycle = _primitive_root(tuple(cycle))
    n = len(cycle)
    if graph is not None:
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            if not graph.has_edge(a, b):
                raise MeasureError(f"cycle uses the missing edge {a}->{b}")
    ext = cycle * 3
    m = 1
    while len({ext[i:i + m] for i in range(n)}) < n:
        m += 1
    states = [ext[i:i + m] for i in range(n)]
    P = sp.csr_array((np.ones(n), (np.arange(n), (np.arange(n) + 1) % n)), shape=(n, n))
    return MarkovMeasure(m, tuple(states), P, np.full(n, 1.0 / n), graph=graph,
                         label=label or "periodic " + "".join(map(str, cycle)))


def random_markov(graph, rng, concentration=1.0, core_only=True, label="random"):
    """Markov measure with Dirichlet transition rows on the strongly connected core."""
    g = graph.core_graph() if core_only else graph
    probs = {}
    for a in g.vertices:
        succ = g.successors[a]
        w = rng.dirichlet(np.full(len(succ), concentration))
        for b, p in zip(succ, w):
            probs[(a, b)] = max(p, 1e-300)
    return _order1(graph, probs, label)


@dataclass(frozen=True)
class Mixture:
    """Finite convex combination of ergodic Markov measures.

    Entropy and integrals are affine on the components, so no merged chain
    is ever formed.
    """

    weights: tuple
    components: tuple
    label: str = "mixture"

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-12 or min(self.weights) < 0:
            raise MeasureError("mixture weights must be a probability vector")

    def entropy(self):
        return float(sum(w * c.entropy() for w, c in zip(self.weights, self.components) if w > 0))

    def integrate(self, phi):
        return float(sum(w * c.integrate(phi) for w, c in zip(self.weights, self.components) if w > 0))

    def free_energy(self, phi):
        return self.entropy() + self.integrate(phi)

    def cylinder_mass(self, word):
        return float(sum(w * c.cylinder_mass(word) for w, c in zip(self.weights, self.components) if w > 0))

    def symbol_masses(self):
        out = {}
        for w, c in zip(self.weights, self.components):
            for s, p in c.symbol_masses().items():
                out[s] = out.get(s, 0.0) + w * p
        return out

    def tail_mass(self, k):
        return float(sum(w * c.tail_mass(k) for w, c in zip(self.weights, self.components) if w > 0))

    def cylinder_vector(self, depth, scale=1.0):
        total = CylinderVector(depth, {}, 0.0)
        for w, c in zip(self.weights, self.components):
            if w > 0:
                total = total + c.cylinder_vector(depth, scale * w)
        return total


def mixture(pairs, label="mixture"):
    """``mixture([(w1, mu1), (w2, mu2), ...])``; nested mixtures are flattened."""
    weights, comps = [], []
    for w, mu in pairs:
        if w == 0:
            continue
        if isinstance(mu, Mixture):
            for w2, c in zip(mu.weights, mu.components):
                weights.append(w * w2)
                comps.append(c)
        else:
            weights.append(w)
            comps.append(mu)
    return Mixture(tuple(weights), tuple(comps), label)


@dataclass(frozen=True)
class CylinderVector:
    """Sub-probability cylinder masses up to a fixed depth."""

    depth: int
    entries: dict
    lam: float

    def __add__(self, other):
        if self.depth != other.depth:
            raise ValueError("depth mismatch")
        e = dict(self.entries)
        for w, m in other.entries.items():
            e[w] = e.get(w, 0.0) + m
        return CylinderVector(self.depth, e, self.lam + other.lam)

    def scale(self, c):
        return CylinderVector(self.depth, {w: c * m for w, m in self.entries.items()}, c * self.lam)

    def mass(self, word):
        return self.entries.get(tuple(word), 0.0)

    def total(self):
        return float(sum(m for w, m in self.entries.items() if len(w) == 1))

    def consistency_defect(self):
        """Largest violation of Kolmogorov consistency and shift invariance."""
        ext, pre = {}, {}
        for w, m in self.entries.items():
            if len(w) >= 2:
                ext[w[:-1]] = ext.get(w[:-1], 0.0) + m
                pre[w[1:]] = pre.get(w[1:], 0.0) + m
        worst = abs(self.total() - self.lam)
        for w, m in self.entries.items():
            if len(w) < self.depth:
                worst = max(worst, abs(m - ext.get(w, 0.0)), abs(m - pre.get(w, 0.0)))
        return worst

    def to_json(self):
        items = sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
        return {"depth": self.depth, "entries": [[list(w), m] for w, m in items], "lambda": self.lam}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["depth"]), {tuple(w): float(m) for w, m in obj["entries"]}, float(obj["lambda"]))


def zero_vector(depth):
    return CylinderVector(depth, {}, 0.0)


def cylinder_distance(v1, v2, depth, graph=None):
    """Weighted cylinder distance ``sum_i 2^-i |v1(C_i) - v2(C_i)|``.

    Cylinders are enumerated by (length, lexicographic) order. With ``graph``
    the enumeration runs over every admissible word of the truncation up to
    ``depth``, which makes the distance a metric on all vectors of that
    truncation; without it the union of the stored words is used.
    """
    if graph is not None:
        words = graph.words_up_to(depth)
    else:
        words = {w for w in v1.entries if len(w) <= depth} | {w for w in v2.entries if len(w) <= depth}
    words = sorted(words, key=lambda w: (len(w), w))
    total = 0.0
    weight = 1.0
    for w in words:
        weight *= 0.5
        if weight == 0.0:
            break
        total += weight * abs(v1.mass(w) - v2.mass(w))
    return total


# inducing -----------------------------------------------------------------------


@dataclass(frozen=True)
class InducedMeasure:
    """Bernoulli measure on return words of a first-return system."""

    a: object
    words: tuple
    masses: np.ndarray
    tau: np.ndarray
    tail: float
    base_mass: float
    base_entropy: float

    @property
    def mean_return_time(self):
        return float(self.masses @ self.tau)

    @property
    def kac_product(self):
        return self.mean_return_time * self.base_mass

    def entropy(self):
        return float(-_xlogx(self.masses).sum())

    @property
    def abramov_gap(self):
        return abs(self.entropy() - self.base_entropy * self.mean_return_time)

    def integrate_induced(self, phi):
        """``int phi_bar d mu_bar`` with ``phi_bar`` the sum of ``phi`` along a return word."""
        vals = np.array([phi.birkhoff(w) for w in self.words])
        return float(self.masses @ vals)


def induce_measure(mu, a, L, tail_tol=1e-9, word_cap=1_000_000, mass_floor=0.0):
    """First-return measure of an order-1 chain on the cylinder ``[a]``.

    A Markov chain restarts at every visit to ``a``, so the induced measure is
    Bernoulli on return words, with mass ``mu([w a]) / mu([a])``. Branches
    whose conditional mass drops below ``mass_floor`` are not explored; their
    mass is reported in ``tail`` like that of words longer than ``L``.
    """
    if mu.order != 1:
        raise MeasureError("induce_measure expects an order-1 measure; lift is not inverse here")
    idx = mu.index
    if (a,) not in idx or mu.pi[idx[(a,)]] <= 0:
        raise MeasureError(f"mu([{a}]) = 0")
    start = idx[(a,)]
    base_mass = float(mu.pi[start])
    words, masses = [], []
    stack = [((a,), start, 1.0)]
    while stack:
        w, i, mass = stack.pop()
        for j, pr in mu.successors(i):
            m2 = mass * pr
            if m2 <= mass_floor:
                continue
            if j == start:
                words.append(w)
                masses.append(m2)
                if len(words) > word_cap:
                    raise MeasureError(f"more than {word_cap} return words")
            elif len(w) < L:
                stack.append((w + (mu.states[j][0],), j, m2))
    masses = np.array(masses)
    tail = 1.0 - masses.sum()
    if tail > tail_tol:
        raise MeasureError(f"return words longer than L={L} carry mass {tail:.3e}")
    order = sorted(range(len(words)), key=lambda k: (len(words[k]), words[k]))
    words = tuple(words[k] for k in order)
    masses = masses[order]
    tau = np.array([len(w) for w in words], dtype=float)
    return InducedMeasure(a, words, masses, tau, float(tail), base_mass, mu.entropy())


# edge subdivision -----------------------------------------------------------------


@dataclass(frozen=True)
class HatReport:
    measure: MarkovMeasure
    mean_roof: float
    entropy_gap: float
    max_cylinder_defect: float
    cylinders_checked: int


def _first_step(info, a, b):
    block = info.blocks[(a, b)]
    return block[1] if len(block) > 1 else b


def hat_measure(mu, hat_graph, check_depth=3):
    """Lift of an order-1 measure to the edge-subdivided shift.

    Parameters
    ----------
    mu : MarkovMeasure
        Order-1 measure on the base graph of the subdivision.
    hat_graph : TruncatedGraph
        Output of :func:`cmsthermo.shifts.subdivide_edges`.
    check_depth : int
        Cylinder depth for the built-in correspondence check (0 to skip).
    """
    info = hat_graph.subdivision
    if info is None:
        raise MeasureError("graph carries no subdivision data")
    if mu.order != 1:
        raise MeasureError("hat_measure expects an order-1 base measure")
    r, c, p = mu._coo()
    mean_tau = 0.0
    probs = {}
    for i, j, pr in zip(r.tolist(), c.tolist(), p.tolist()):
        a, b = mu.states[i][0], mu.states[j][0]
        mean_tau += mu.pi[i] * pr * info.roof[(a, b)]
        block = info.blocks[(a, b)]
        path = list(block) + [b]
        probs[(a, path[1])] = pr
        for x, y in zip(path[1:-1], path[2:]):
            probs[(x, y)] = 1.0
    verts = sorted({x for e in probs for x in e})
    index = {v: k for k, v in enumerate(verts)}
    n = len(verts)
    P = sp.csr_array(([probs[e] for e in probs], ([index[e[0]] for e in probs], [index[e[1]] for e in probs])),
                     shape=(n, n))
    pi = np.zeros(n)
    base_pi = {s[0]: float(v) for s, v in zip(mu.states, mu.pi)}
    for v in verts:
        if v in info.fresh:
            a, b, _ = info.fresh[v]
            pi[index[v]] = base_pi[a] * mu.P[mu.index[(a,)], mu.index[(b,)]] / mean_tau
        else:
            pi[index[v]] = base_pi[v] / mean_tau
    hat = MarkovMeasure(1, tuple((v,) for v in verts), P, pi / pi.sum(), graph=hat_graph, label="hat")
    gap = abs(hat.entropy() - mu.entropy() / mean_tau)
    worst, count = 0.0, 0
    if check_depth:
        vec = hat.cylinder_vector(check_depth)
        for C, mass in vec.entries.items():
            D = hat_cylinder_preimage(C, info)
            worst = max(worst, abs(mass - mu.cylinder_mass(D) / mean_tau))
            count += 1
    return HatReport(hat, float(mean_tau), float(gap), float(worst), count)


def hat_cylinder_preimage(C, info):
    """Base cylinder ``D`` with ``mu_hat(C) = mu(D) / int tau dmu``."""
    D = []
    open_ = False
    for s in C:
        if s in info.fresh:
            a, b, _ = info.fresh[s]
            if not D:
                D = [a, b]
                open_ = False
            elif open_:
                D.append(b)
                open_ = False
        else:
            if not D or open_:
                D.append(s)
            open_ = True
    return tuple(D)


def unhat_measure(hat, info):
    """Inverse of :func:`hat_measure`: recover the base order-1 measure."""
    base = info.base
    probs = {}
    hidx = hat.index
    for (a, b) in info.roof:
        if (a,) not in hidx:
            continue
        first = _first_step(info, a, b)
        if (first,) not in hidx:
            continue
        pr = hat.P[hidx[(a,)], hidx[(first,)]]
        if pr > 0:
            probs[(a, b)] = pr
    return _order1(base, probs, label="unhat")


# sequences -------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureSequence:
    """Lazily generated sequence ``n -> mu_n`` (n = 1, 2, ...) with its declared cylinder limit.

    The limit is ``lam * limit`` where ``limit`` is a probability measure (or
    ``None`` when ``lam == 0``).
    """

    generator: Callable
    lam: float
    limit: object = None
    name: str = ""
    start: int = 1

    def __getitem__(self, n):
        return self.generator(n)

    def prefix(self, length):
        return [self.generator(n) for n in range(self.start, self.start + length)]

    def limit_vector(self, depth):
        if self.limit is None or self.lam == 0:
            return zero_vector(depth)
        return self.limit.cylinder_vector(depth, self.lam)


def renewal_loop_measure(ks, weights=None, spec=None):
    """Inverse Kac image of a Bernoulli measure on renewal loops of lengths ``ks``."""
    ks = np.asarray(sorted(set(int(k) for k in ks)))
    w = np.ones(len(ks)) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    N = int(ks.max())
    g = build_truncation(spec or renewal_shift(), N)
    probs = {(1, int(k)): float(p) for k, p in zip(ks, w)}
    for j in range(2, N + 1):
        probs[(j, j - 1)] = 1.0
    mu = _order1(g, probs, label=f"loops[{ks.min()}..{ks.max()}]")
    return mu


def escape_sequence(spec, kind, params=None):
    """Build a :class:`MeasureSequence`.

    kinds
    -----
    ``deep-loops``
        renewal family; ``mu_n`` is the loop measure on loop lengths
        ``n .. n+width-1`` with weights ``exp(phi_bar_k - s*k)`` (uniform when
        no potential is given). Declared limit: zero.
    ``convex-combination``
        ``params = {lam, mu, inner}``: ``lam*mu + (1-lam)*inner_n``.
    ``constant``
        ``params = {mu}``.
    ``perturbation``
        ``params = {mu, nu, rate}``: ``(1-rate^n) mu + rate^n nu``, limit ``mu``.
    ``truncated-equilibria``
        full-shift family; equilibrium of a depth-1 ``phi`` on the
        truncation ``{1..n+n0}``. Declared limit: mass 1.
    """
    params = dict(params or {})
    if kind == "deep-loops":
        if spec is not None and spec.family != "renewal":
            raise MeasureError(f"family {spec.family!r} has no long first-return loops")
        width = int(params.get("width", 1))
        phi = params.get("phi")
        s = float(params.get("s", 0.0))

        def gen(n):
            ks = np.arange(n, n + width)
            if phi is None:
                wts = np.exp(-s * ks) if s else None
            else:
                from .inducing import renewal_loop_values
                vals = renewal_loop_values(phi, int(ks.max()))[ks - 1]
                lw = vals - s * ks
                wts = np.exp(lw - lw.max())
            return renewal_loop_measure(ks, wts, spec)

        return MeasureSequence(gen, 0.0, None, name=f"deep-loops(w={width})")
    if kind == "convex-combination":
        lam = float(params["lam"])
        mu = params["mu"]
        inner = params["inner"]
        if lam == 1.0:
            return MeasureSequence(lambda n: mu, 1.0, mu, name="constant")
        gen = lambda n: mixture([(lam, mu), (1 - lam, inner[n])])
        lim_lam = lam + (1 - lam) * inner.lam
        if inner.lam > 0 and inner.limit is not None:
            limit = mixture([(lam / lim_lam, mu), ((1 - lam) * inner.lam / lim_lam, inner.limit)])
        else:
            limit = mu
        return MeasureSequence(gen, lim_lam, limit, name=f"mix({lam:g})")
    if kind == "constant":
        mu = params["mu"]
        return MeasureSequence(lambda n: mu, 1.0, mu, name="constant")
    if kind == "perturbation":
        mu, nu = params["mu"], params["nu"]
        rate = float(params.get("rate", 0.5))
        gen = lambda n: mixture([(1 - rate ** n, mu), (rate ** n, nu)])
        return MeasureSequence(gen, 1.0, mu, name=f"perturbation({rate:g})")
    if kind == "truncated-equilibria":
        from .pressure import spectral_pressure
        from .shifts import full_shift
        phi = params["phi"]
        n0 = int(params.get("n0", 1))
        base = spec if spec is not None else full_shift()

        def gen(n):
            g = build_truncation(base, n + n0)
            return spectral_pressure(g, phi).rpf.measure

        return MeasureSequence(gen, 1.0, None, name="truncated-equilibria")
    raise MeasureError(f"unknown sequence kind {kind!r}")


@dataclass(frozen=True)
class MassLossTable:
    ks: tuple
    limsup: tuple
    per_step: tuple
    double_limit: float


def mass_loss_diagnostic(seq, ks, prefix=50, window=0.25):
    """``limsup_n mu_n(levels >= k)`` per ``k``.

    The limsup is the maximum over the last ``window`` fraction of the
    prefix; it is forced nonincreasing in ``k`` (it already is for exact
    data). The double limit is the value at the largest ``k``.
    """
    ks = sorted(int(k) for k in ks)
    measures = seq.prefix(prefix)
    start = int(math.floor(prefix * (1 - window)))
    table = []
    for mu in measures:
        table.append([mu.tail_mass(k) for k in ks])
    arr = np.array(table)
    lims = arr[start:].max(axis=0)
    lims = np.minimum.accumulate(lims)
    return MassLossTable(tuple(ks), tuple(float(x) for x in lims), tuple(map(tuple, arr.tolist())),
                         float(lims[-1]))
