"""First-return systems, induced pressure and the discriminant.

Inducing on the 1-cylinder ``[a]`` gives a full shift on return words
``w = a b_1 ... b_n`` (``b_i != a``, ``b_n -> a``) with return time
``tau(w) = |w|`` and induced potential ``phi_bar(w)`` (the Birkhoff sum of
``phi`` along ``w a``). The induced pressure of ``phi_bar + t*tau`` is

    f(t) = log sum_w exp(phi_bar(w) + t*tau(w)),

and the sign of its supremum below the finiteness threshold classifies the
recurrence of ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from . import _numerics as nm
from .shifts import TruncatedGraph, build_truncation

INDEXED_K = 100_000
SPR_TOL = 1e-9


class CensusOverflow(ValueError):
    """Too many return words; ``partial`` holds the census so far."""

    def __init__(self, msg, partial):
        super().__init__(msg)
        self.partial = partial


def renewal_loop_values(phi, K):
    """``phi_bar`` on the renewal loops ``1 k k-1 ... 2`` for ``k = 1..K``."""
    ks = np.arange(1, K + 1)
    first = phi.symbol_values(np.ones(K, dtype=np.int64), ks)        # phi(1, k)
    js = np.arange(2, K + 1)
    down = phi.symbol_values(js, js - 1)                              # phi(j, j-1)
    out = first.copy()
    out[1:] += np.cumsum(down)
    return out


def star_loop_values(phi, K):
    """``phi_bar`` on the star loops ``1 k`` for ``k = 2..K`` (index 0 is k=2)."""
    ks = np.arange(2, K + 1)
    ones = np.ones(len(ks), dtype=np.int64)
    return phi.symbol_values(ones, ks) + phi.symbol_values(ks, ones)


@dataclass
class IndexedTail:
    """Return words indexed by ``k`` with explicit values up to ``K`` and a fitted law beyond."""

    ks: np.ndarray
    phibar: np.ndarray
    tau: np.ndarray
    law: tuple          # phi_bar ~ alpha k + beta log k + c
    tau_law: tuple      # tau ~ same form, exact
    regime: str = "law"  # "law", "superlinear-up", "superlinear-down" or "unknown"

    def _last_slope(self, t):
        d = float(self.phibar[-1] - self.phibar[-2]) + t * float(self.tau[-1] - self.tau[-2])
        return d

    def term_law(self, t):
        return tuple(p + t * q for p, q in zip(self.law, self.tau_law))

    def verdict(self, t):
        a, b, _ = self.term_law(t)
        return nm.series_verdict(a, b)

    def log_sum(self, t, weight_tau=False):
        terms = self.phibar + t * self.tau
        if weight_tau:
            terms = terms + np.log(self.tau)
        if self.regime == "superlinear-up":
            return math.inf
        if self.regime == "unknown":
            return math.nan
        if self.regime == "superlinear-down":
            # ratios of consecutive terms keep shrinking past K: geometric bound
            r = self._last_slope(t)
            if r > -1.0:
                return math.nan
            rem = float(terms[-1]) + r - math.log(-math.expm1(r))
            return float(np.logaddexp(logsumexp(terms), rem))
        a, b, c = self.term_law(t)
        if weight_tau:
            # tau_k = k adds log k; constant tau adds log tau
            if self.tau_law[0]:
                b += 1.0
            else:
                c += math.log(self.tau_law[2])
        if nm.series_verdict(a, b) != "finite":
            return math.inf
        rem = nm.log_remainder(a, b, c, int(self.ks[-1]))
        return float(np.logaddexp(logsumexp(terms), rem))

    def p_star(self):
        if self.regime == "superlinear-up":
            return -math.inf
        if self.regime == "superlinear-down":
            return math.inf
        if self.regime == "unknown":
            return math.nan
        alpha, beta, _ = self.law
        ta = self.tau_law[0]
        if ta > 0:
            return -alpha / ta
        v = nm.series_verdict(alpha, beta)
        return math.inf if v == "finite" else (-math.inf if v == "divergent" else math.nan)


@dataclass
class InducedSystem:
    """Census of return words to ``[a]`` plus a tail description.

    ``tail_kind`` is one of ``resolvent`` (finite graph, exact),
    ``indexed`` (renewal/star family laws), ``full-first-coordinate``
    (full shift with a depth-1 potential) or ``None``.
    """

    a: object
    words: tuple
    tau: np.ndarray
    phibar: np.ndarray
    tail_kind: str | None
    tail: object = None
    phi: object = None
    source: str = ""

    def census_rows(self):
        return [(" ".join(map(str, w)), int(t), float(v)) for w, t, v in zip(self.words, self.tau, self.phibar)]

    def curve(self, t):
        return induced_pressure_curve(self, t)

    def moment_verdict(self, t):
        """Finiteness of ``sum_w tau(w) exp(phi_bar(w) + t tau(w))``."""
        if self.tail_kind == "indexed":
            val = self.tail.log_sum(t, weight_tau=True)
            return "finite" if math.isfinite(val) else "divergent"
        if self.tail_kind in ("resolvent", "full-first-coordinate"):
            return "finite" if t < self.p_star() else "divergent"
        return "undecided"

    def p_star(self):
        if self.tail_kind == "indexed":
            return self.tail.p_star()
        if self.tail_kind == "resolvent":
            return self.tail["p_star"]
        if self.tail_kind == "full-first-coordinate":
            return self.tail["p_star"]
        return math.nan


def _census(graph, phi, a, L, word_cap):
    succ = graph.successors
    words, taus, vals = [], [], []
    if graph.has_edge(a, a):
        words.append((a,))
    stack = [(a,)]
    while stack:
        w = stack.pop()
        if len(w) >= L:
            continue
        for b in succ[w[-1]]:
            if b == a:
                continue
            w2 = w + (b,)
            if graph.has_edge(b, a):
                words.append(w2)
                if len(words) > word_cap:
                    raise CensusOverflow(f"more than {word_cap} return words up to length {L}", tuple(words))
            stack.append(w2)
    words.sort(key=lambda w: (len(w), w))
    for w in words:
        taus.append(len(w))
        vals.append(phi.birkhoff(w) if phi is not None else 0.0)
    return tuple(words), np.array(taus, dtype=float), np.array(vals, dtype=float)


def _spectral_radius_log(n, src, dst, lw):
    """log of the spectral radius of a (possibly reducible) nonnegative matrix."""
    if n == 0 or len(src) == 0:
        return -math.inf
    A = sp.csr_array((np.ones(len(src)), (src, dst)), shape=(n, n))
    _, labels = connected_components(A, directed=True, connection="strong")
    best = -math.inf
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        inside = np.zeros(n, dtype=bool)
        inside[members] = True
        mask = inside[src] & inside[dst]
        if not mask.any():
            continue
        loc = -np.ones(n, dtype=np.int64)
        loc[members] = np.arange(len(members))
        from .pressure import perron_log
        val = perron_log(len(members), loc[src[mask]], loc[dst[mask]], lw[mask])[0]
        best = max(best, val)
    return best


def _resolvent_tail(graph, phi, a):
    src, dst = graph.edge_arrays
    lw = phi.edge_values(graph)
    ia = graph.index[a]
    shift = float(lw.max())
    W = sp.csr_array((np.exp(lw - shift), (src, dst)), shape=(graph.n, graph.n))
    rest = np.array([i for i in range(graph.n) if i != ia], dtype=np.int64)
    keep = (src != ia) & (dst != ia)
    loc = -np.ones(graph.n, dtype=np.int64)
    loc[rest] = np.arange(len(rest))
    log_rho = _spectral_radius_log(len(rest), loc[src[keep]], loc[dst[keep]], lw[keep])
    Wr = W[rest][:, rest].tocsc()
    r = W[[ia]][:, rest].toarray().ravel()
    c = W[rest][:, [ia]].toarray().ravel()
    return {"p_star": -log_rho, "shift": shift, "Waa": float(W[ia, ia]), "Wr": Wr, "r": r, "c": c,
            "log_rho": log_rho}


def _resolvent_value(tail, t):
    if t >= tail["p_star"]:
        return math.inf
    s = tail["shift"]
    et = math.exp(t + s)
    total = et * tail["Waa"]
    if tail["r"].size:
        n = tail["Wr"].shape[0]
        M = sp.identity(n, format="csc") - et * tail["Wr"]
        x = sp.linalg.spsolve(M, tail["c"]) if n > 1 else tail["c"] / M.toarray()[0, 0]
        total += et * et * float(tail["r"] @ np.atleast_1d(x))
    if total <= 0:
        return -math.inf
    if not np.isfinite(total) or total < 0:
        return math.inf
    return math.log(total)


def _tail_regime(phibar, resid, rel_tol=1e-6, drift=0.5):
    """Whether the fitted ``alpha k + beta log k + c`` law describes the loop values.

    Increments ``phi_bar(k+1) - phi_bar(k)`` that keep moving by more than
    ``drift`` between k = K/100, K/10 and K mark super-linear growth or decay
    (``log k!``-type sums), which the law cannot represent.
    """
    K = len(phibar)
    d = np.diff(phibar)
    probe = [d[max(K // 100, 2) - 1], d[K // 10 - 1], d[-1]]
    if probe[1] - probe[0] > drift and probe[2] - probe[1] > drift:
        return "superlinear-up"
    if probe[0] - probe[1] > drift and probe[1] - probe[2] > drift:
        return "superlinear-down"
    if resid > rel_tol * max(1.0, float(np.abs(phibar[K // 10:]).max())):
        return "unknown"
    return "law"


def build_induced(target, phi, a=1, L=None, N=None, word_cap=1_000_000, K=INDEXED_K):
    """First-return system of ``phi`` at ``a``.

    Parameters
    ----------
    target : CmsSpec or TruncatedGraph
    phi : Potential of depth <= 2
    a : symbol on a cycle
    L : int
        Longest return word kept in the explicit census.
    N : int
        Truncation used for the census of infinite families.
    """
    if phi.depth > 2:
        raise ValueError("inducing needs a potential of depth <= 2")
    if isinstance(target, TruncatedGraph):
        graph, spec = target, target.spec
        exact_graph = True
    else:
        spec = target
        exact_graph = spec.is_finite
        if exact_graph:
            graph = build_truncation(spec)
        else:
            # the full shift has N^(L-1) return words of length L, the other families one or two
            L = L or (3 if spec.family == "full" else 40)
            graph = build_truncation(spec, N or max(L, 40))
    L = L or min(graph.n + 1, 12)
    words, tau, vals = _census(graph, phi, a, L, word_cap)
    if not exact_graph and spec.family in ("renewal", "star") and a == 1:
        if spec.family == "renewal":
            ks = np.arange(1, K + 1)
            phibar = renewal_loop_values(phi, K)
            taus = ks.astype(float)
            tau_law = (1.0, 0.0, 0.0)
        else:
            ks = np.arange(2, K + 1)
            phibar = star_loop_values(phi, K)
            taus = np.full(len(ks), 2.0)
            tau_law = (0.0, 0.0, 2.0)
        sample = np.unique(np.geomspace(K // 10, K, 200).astype(np.int64))
        *law, resid = nm.fit_tail_law(sample, phibar[sample - ks[0]], return_residual=True)
        regime = _tail_regime(phibar, resid)
        tail = IndexedTail(ks, phibar, taus, tuple(law), tau_law, regime)
        return InducedSystem(a, words, tau, vals, "indexed", tail, phi, source=spec.family)
    if not exact_graph and spec.family == "full" and phi.depth == 1 and phi.tail is not None:
        from .pressure import full_shift_series
        total, verdict, _ = full_shift_series(phi)
        aa = float(phi((a,)))
        if verdict == "finite":
            rest = float(total + math.log(-math.expm1(aa - total)))
            p_star = -rest
        else:
            rest, p_star = math.inf, -math.inf
        tail = {"p_star": p_star, "log_rest": rest, "a_a": aa}
        return InducedSystem(a, words, tau, vals, "full-first-coordinate", tail, phi, source="full")
    if exact_graph:
        return InducedSystem(a, words, tau, vals, "resolvent", _resolvent_tail(graph, phi, a), phi,
                             source="finite")
    # truncation of a family without a law: the resolvent of the truncation, flagged
    return InducedSystem(a, words, tau, vals, "resolvent", _resolvent_tail(graph, phi, a), phi,
                         source=f"truncation N={graph.N}")


def induced_pressure_curve(ind, t):
    """``P(phi_bar + t tau)``; ``+inf`` when the series diverges, ``nan`` if undecided."""
    kind = ind.tail_kind
    if kind == "resolvent":
        return _resolvent_value(ind.tail, t)
    if kind == "indexed":
        return ind.tail.log_sum(t)
    if kind == "full-first-coordinate":
        tl = ind.tail
        if not t < tl["p_star"]:
            return math.inf
        return tl["a_a"] + t - math.log(-math.expm1(t + tl["log_rest"]))
    if len(ind.words) == 0:
        return -math.inf
    return math.nan


@dataclass
class DiscriminantReport:
    p_star: float
    delta: float
    root: float | None
    classification: str
    implied_pressure: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"p_star": self.p_star, "delta": self.delta, "root": self.root,
                "classification": self.classification, "implied_pressure": self.implied_pressure,
                "details": self.details}


def _classify(delta):
    if delta > SPR_TOL:
        return "SPR"
    if delta < -SPR_TOL:
        return "transient"
    return "boundary"


def discriminant(ind, phi=None, xtol=1e-14):
    """Discriminant ``Delta_a(phi)`` and the root ``p(phi)`` of the induced pressure."""
    f = ind.curve
    p_star = ind.p_star()
    details = {"tail_kind": ind.tail_kind, "source": ind.source}
    if math.isnan(p_star):
        return DiscriminantReport(p_star, math.nan, None, "undecided", math.nan, details)
    if p_star == -math.inf:
        return DiscriminantReport(p_star, math.nan, None, "divergent", math.inf, details)
    # value at (left limit of) p_star
    if math.isfinite(p_star):
        at = f(p_star)
        delta = at if math.isfinite(at) else math.inf
    else:
        delta = math.inf
    details["delta_source"] = "series at p_star" if math.isfinite(delta) else "divergent at p_star"
    cls = _classify(delta)
    if delta < -SPR_TOL:
        return DiscriminantReport(p_star, delta, None, cls, -p_star, details)
    undecided = DiscriminantReport(p_star, delta, None, "undecided", math.nan, details)
    lo = -50.0
    while not f(lo) < 0:
        if math.isnan(f(lo)):
            details["bracket"] = "curve not evaluable at the lower end"
            return undecided
        lo *= 2
        if lo < -1e6:
            raise RuntimeError("could not bracket the induced pressure root from below")
    if math.isfinite(p_star):
        if math.isfinite(delta):
            hi = p_star
        else:
            eps = 1e-3
            hi = p_star - eps
            while not f(hi) > 0:
                eps *= 0.1
                hi = p_star - eps
                if eps < 1e-15:
                    break
    else:
        hi = 0.0
        while not f(hi) > 0:
            if math.isnan(f(hi)) or hi > 1e6:
                # the root lies past the explicit census and the tail cannot be summed there
                details["bracket"] = "curve not evaluable at the upper end"
                return undecided
            hi = 2 * hi + 1
    hi = min(hi, p_star)
    if abs(delta) <= SPR_TOL:
        root = p_star
    else:
        root = brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return DiscriminantReport(p_star, delta, float(root), cls, -float(root), details)


def spr_certificate_induced(target, phi, a=1, cross_check=False):
    """SPR through the induced route: ``Delta_a(phi) > 1e-9``.

    With ``cross_check`` the ``P_inf < P`` test is run as well and any
    disagreement is reported under ``consistent``.
    """
    ind = build_induced(target, phi, a)
    rep = discriminant(ind)
    out = {"discriminant": rep.to_dict()}
    if rep.classification == "undecided":
        return None, out
    ok = rep.delta > SPR_TOL
    if cross_check:
        from .infinity import spr_test
        other, info = spr_test(target, phi)
        out["spr_test"] = info
        out["consistent"] = other is None or other == ok
    return ok, out
