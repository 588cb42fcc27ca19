"""Locally constant potentials with optional analytic tail laws.

A :class:`Potential` of depth ``k`` is a function of the first ``k``
coordinates. It is stored as a Python rule on symbol tuples, optionally
accompanied by a vectorised version on integer symbol arrays (needed for
large truncations) and by a first-coordinate tail law

    a(i) ~ alpha * i + beta * log(i) + c      (i -> infinity)

which lets the pressure routines sum series beyond any truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np


def _plain_symbols(graph):
    return graph.recoding == 1 and graph.subdivision is None


@dataclass(frozen=True, eq=False)
class Potential:
    """Depth-k locally constant potential.

    Parameters
    ----------
    depth : int
        Number of coordinates the potential reads.
    rule : callable
        ``rule(word) -> float`` on a tuple of at least ``depth`` symbols.
    vec : callable, optional
        ``vec(a, b) -> ndarray`` on integer symbol arrays (``b`` ignored when
        ``depth == 1``). Only used on plain integer-symbol graphs.
    graph_fn : callable, optional
        ``graph_fn(graph, src_idx, dst_idx) -> ndarray``, overrides every
        other evaluation route (used by level-dependent potentials).
    tail : tuple (alpha, beta, c), optional
        Asymptotic first-coordinate law, for depth-1 potentials on the
        countable alphabet.
    sup_bound : float
        Declared upper bound of the potential (``inf`` if unknown).
    """

    depth: int
    rule: Callable
    vec: Callable | None = None
    graph_fn: Callable | None = None
    tail: tuple | None = None
    sup_bound: float = math.inf
    name: str = "phi"
    constant: float | None = None

    def __call__(self, word):
        word = tuple(word)
        if len(word) < self.depth:
            raise ValueError(f"potential of depth {self.depth} needs {self.depth} symbols, got {len(word)}")
        return float(self.rule(word[: self.depth]))

    # evaluation on graphs -------------------------------------------------

    def edge_values(self, graph):
        """Values on the edges of ``graph`` in ``graph.edge_arrays`` order."""
        src, dst = graph.edge_arrays
        return self.values_at(graph, src, dst)

    def values_at(self, graph, src, dst):
        if self.depth > 2:
            raise ValueError("edge evaluation needs depth <= 2; recode the graph first")
        if self.constant is not None:
            return np.full(len(src), self.constant)
        if self.graph_fn is not None:
            return np.asarray(self.graph_fn(graph, src, dst), dtype=float)
        verts = graph.vertices
        if self.vec is not None and _plain_symbols(graph):
            sym = np.asarray(verts)
            return np.asarray(self.vec(sym[src], sym[dst]), dtype=float) * np.ones(len(src))
        if self.depth == 1:
            vals = np.array([self.rule((v,)) for v in verts], dtype=float)
            return vals[src]
        return np.array([self.rule((verts[i], verts[j])) for i, j in zip(src.tolist(), dst.tolist())],
                        dtype=float)

    def vertex_values(self, graph):
        """Values of a depth-1 potential on the vertices of ``graph``."""
        if self.depth != 1:
            raise ValueError("vertex values need a depth-1 potential")
        idx = np.arange(graph.n)
        return self.values_at(graph, idx, idx)

    def symbol_values(self, symbols, nxt=None):
        """Vectorised values on integer symbols (pairs when ``nxt`` is given)."""
        symbols = np.asarray(symbols)
        nxt = symbols if nxt is None else np.asarray(nxt)
        if self.constant is not None:
            return np.full(symbols.shape, self.constant)
        if self.vec is not None:
            return np.asarray(self.vec(symbols, nxt), dtype=float) * np.ones(symbols.shape)
        if self.depth == 1:
            return np.array([self.rule((int(s),)) for s in symbols], dtype=float)
        return np.array([self.rule((int(s), int(t))) for s, t in zip(symbols, nxt)], dtype=float)

    # analysis --------------------------------------------------------------

    def var(self, n, graph):
        """``var_n``: largest oscillation over admissible n-cylinders of the truncation."""
        if n >= self.depth:
            return 0.0
        best = 0.0
        groups = {}
        for w in graph.words(self.depth):
            v = self(w)
            lo, hi = groups.get(w[:n], (v, v))
            groups[w[:n]] = (min(lo, v), max(hi, v))
        for lo, hi in groups.values():
            best = max(best, hi - lo)
        return best

    def sup(self, graph):
        if self.depth <= 2:
            vals = self.edge_values(graph)
        else:
            vals = [self(w) for w in graph.words(self.depth)]
        return float(np.max(vals))

    def birkhoff(self, word, n=None):
        """``S_n phi`` along the periodic point ``(word)^infinity``."""
        word = tuple(word)
        n = len(word) if n is None else n
        ext = word * (1 + (n + self.depth) // len(word))
        return float(sum(self(ext[i:i + self.depth]) for i in range(n)))

    # arithmetic ------------------------------------------------------------

    def _combine(self, other, op, name):
        if not isinstance(other, Potential):
            other = constant(float(other))
        a, b = self, other
        depth = max(a.depth, b.depth)

        def rule(w):
            return op(a.rule(w[: a.depth]), b.rule(w[: b.depth]))

        vec = None
        if a.vec is not None or a.constant is not None:
            if b.vec is not None or b.constant is not None:
                def vec(s, t):
                    return op(a.symbol_values(s, t), b.symbol_values(s, t))
        graph_fn = None
        if a.graph_fn is not None or b.graph_fn is not None:
            def graph_fn(g, s, t):
                return op(a.values_at(g, s, t), b.values_at(g, s, t))
        tail = None
        if a.tail is not None and b.tail is not None:
            tail = tuple(op(x, y) for x, y in zip(a.tail, b.tail))
        cst = None
        if a.constant is not None and b.constant is not None:
            cst = op(a.constant, b.constant)
        sup = a.sup_bound + b.sup_bound if op is _add else math.inf
        return Potential(depth, rule, vec=vec, graph_fn=graph_fn, tail=tail,
                         sup_bound=sup, name=name, constant=cst)

    def __add__(self, other):
        other_name = other.name if isinstance(other, Potential) else repr(other)
        return self._combine(other, _add, f"({self.name} + {other_name})")

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, Potential) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, t):
        t = float(t)
        rule = self.rule
        vec = self.vec
        gfn = self.graph_fn
        return Potential(
            self.depth, lambda w: t * rule(w),
            vec=None if vec is None else (lambda s, u: t * vec(s, u)),
            graph_fn=None if gfn is None else (lambda g, s, u: t * gfn(g, s, u)),
            tail=None if self.tail is None else tuple(t * x for x in self.tail),
            sup_bound=t * self.sup_bound if t >= 0 and math.isfinite(self.sup_bound) else math.inf,
            name=f"{t:g}*{self.name}",
            constant=None if self.constant is None else t * self.constant)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Potential({self.name}, depth={self.depth})"


def _add(x, y):
    return x + y


def constant(c):
    c = float(c)
    return Potential(1, lambda w: c, tail=(0.0, 0.0, c), sup_bound=c, name=f"{c:g}", constant=c)


def zero():
    return constant(0.0)


def first_coordinate(fn, vec=None, tail=None, sup_bound=math.inf, name="a(x1)"):
    """``phi(x) = fn(x_1)``; ``vec`` is the array version of ``fn``."""
    v = None if vec is None else (lambda s, t: vec(s))
    return Potential(1, lambda w: fn(w[0]), vec=v, tail=tail, sup_bound=sup_bound, name=name)


def edge(fn, vec=None, sup_bound=math.inf, name="phi(x1,x2)"):
    """Depth-2 potential ``phi(x) = fn(x_1, x_2)``."""
    return Potential(2, lambda w: fn(w[0], w[1]), vec=vec, sup_bound=sup_bound, name=name)


def table(values, default=None, name="table"):
    """Potential given by a table ``{word: value}`` (all keys of one length)."""
    values = {tuple(k): float(v) for k, v in values.items()}
    depths = {len(k) for k in values}
    if len(depths) != 1:
        raise ValueError("table keys must all have the same length")
    depth = depths.pop()

    def rule(w):
        try:
            return values[tuple(w)]
        except KeyError:
            if default is None:
                raise KeyError(f"word {w} missing from potential table") from None
            return float(default)

    sup = max(list(values.values()) + ([float(default)] if default is not None else []))
    return Potential(depth, rule, sup_bound=sup, name=name)


def indicator(word, name=None):
    """Indicator of the cylinder ``[word]``."""
    word = tuple(word)
    k = len(word)
    vec = None
    if k == 1:
        s0 = word[0]
        vec = lambda s, t: (np.asarray(s) == s0).astype(float)
    elif k == 2:
        s0, s1 = word
        vec = lambda s, t: ((np.asarray(s) == s0) & (np.asarray(t) == s1)).astype(float)
    return Potential(k, lambda w: 1.0 if tuple(w[:k]) == word else 0.0, vec=vec,
                     sup_bound=1.0, name=name or f"1[{','.join(map(str, word))}]")


def _penalty_on_graph(g, src, dst):
    return 1.0 / g.level_array[src]


def penalty():
    """``V(x) = 1 / level(x_1)``; on plain graphs the level of k is k."""
    return Potential(1, lambda w: 1.0 / float(w[0]), vec=lambda s, t: 1.0 / np.asarray(s, dtype=float),
                     graph_fn=_penalty_on_graph, tail=(0.0, 0.0, 0.0), sup_bound=1.0, name="V")


def log_law(beta, c=0.0):
    """``a(i) = -beta * log(i) + c``."""
    beta, c = float(beta), float(c)
    return first_coordinate(lambda i: -beta * math.log(i) + c,
                            vec=lambda s: -beta * np.log(np.asarray(s, dtype=float)) + c,
                            tail=(0.0, -beta, c), sup_bound=c if beta >= 0 else math.inf,
                            name=f"-{beta:g}log(i)")


def linear_law(rate, c=0.0):
    """``a(i) = -rate * i + c``."""
    rate, c = float(rate), float(c)
    return first_coordinate(lambda i: -rate * i + c,
                            vec=lambda s: -rate * np.asarray(s, dtype=float) + c,
                            tail=(-rate, 0.0, c), sup_bound=c - rate if rate >= 0 else math.inf,
                            name=f"-{rate:g}i")


def lift_potential(phi, m, to_base=None):
    """Read a base potential on the m-block recoding.

    The lifted potential has depth ``max(1, depth - m + 1)`` in block symbols.
    """
    if m == 1:
        return phi
    depth = max(1, phi.depth - m + 1)
    k = phi.depth

    def rule(blocks):
        base = tuple(blocks[0]) + tuple(b[-1] for b in blocks[1:])
        return phi.rule(base[:k])

    return Potential(depth, rule, sup_bound=phi.sup_bound, name=f"{phi.name}@{m}",
                     constant=phi.constant)


def roof_from_ceiling(psi, graph):
    """Integer depth-2 roof ``tau(a, b) = max ceil(psi)`` over the 2-cylinder [a, b]."""
    out = {}
    for a, b in graph.edges:
        if psi.depth <= 2:
            val = psi((a, b, b)[: max(psi.depth, 2)])
        else:
            val = max(psi(w) for w in graph.words(psi.depth) if w[:2] == (a, b))
        out[(a, b)] = int(math.ceil(val - 1e-12))
    return out
