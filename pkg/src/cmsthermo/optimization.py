"""Ergodic optimisation: beta, beta_inf, maximising cycles and zero temperature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _numerics as nm
from .infinity import DEFAULT_PAIRS, _truncate, pressure_at_infinity
from .measures import cylinder_distance, periodic_measure
from .pressure import prepare, spectral_pressure
from .shifts import CmsSpec, TruncatedGraph, build_truncation


@dataclass
class OptimizationReport:
    beta: float
    beta_inf: float | None = None
    cycle: tuple | None = None
    verdict: str = "undecided"
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"beta": self.beta, "beta_inf": self.beta_inf,
                "cycle": None if self.cycle is None else [_plain(v) for v in self.cycle],
                "verdict": self.verdict, "diagnostics": self.diagnostics}


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def _lex_smallest_cycle(n, adj, allowed):
    """Lexicographically smallest simple cycle (by vertex index) in the subgraph ``adj``."""
    def reach(start, target, banned):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v == target:
                    return True
                if v not in seen and v not in banned:
                    seen.add(v)
                    stack.append(v)
        return False

    for v0 in sorted(allowed):
        if not reach(v0, v0, set()):
            continue
        path = [v0]
        visited = {v0}
        cur = v0
        while True:
            nxt = sorted(adj[cur])
            if v0 in nxt:
                return path
            for w in nxt:
                if w in visited or w < v0:
                    continue
                if reach(w, v0, visited):
                    path.append(w)
                    visited.add(w)
                    cur = w
                    break
            else:
                return None
    return None


def beta(graph, phi, tie_tol=1e-9):
    """Maximum ergodic average of ``phi`` on a truncation (maximum cycle mean).

    Returns the report with the lexicographically smallest maximising cycle
    (in the vertex order of the graph) and checks that its periodic measure
    attains the value.
    """
    g, p, m = prepare(graph, phi)
    core = g.core_graph()
    src, dst = core.edge_arrays
    w = p.edge_values(core)
    lam = nm.karp_max_mean(core.n, src, dst, w)
    pot = nm.longest_potentials(core.n, src, dst, w, lam)
    red = w - lam + pot[src] - pot[dst]
    tight = np.abs(red) <= tie_tol * max(1.0, np.abs(w).max())
    adj = {i: [] for i in range(core.n)}
    for u, v in zip(src[tight].tolist(), dst[tight].tolist()):
        adj[u].append(v)
    cyc_idx = _lex_smallest_cycle(core.n, adj, set(src[tight].tolist()))
    cycle = None
    attained = None
    if cyc_idx is not None:
        verts = [core.vertices[i] for i in cyc_idx]
        cycle = tuple(verts) if m == 1 else tuple(v[0] for v in verts)
        mean = float(np.mean([w[(src == a) & (dst == b)][0] for a, b in zip(cyc_idx, cyc_idx[1:] + cyc_idx[:1])]))
        attained = abs(mean - lam)
    return OptimizationReport(float(lam), cycle=cycle, verdict="maximizer-found" if cycle else "undecided",
                              diagnostics={"attained_gap": attained, "states": core.n})


def beta_schedule(spec, phi, N_schedule=(10, 30, 100, 300, 1000)):
    return [(int(N), beta(build_truncation(spec, N), phi).beta) for N in N_schedule]


def log_restricted_max(graph, phi, a, n_max, q, M):
    """Max-plus analogue of the restricted partition sums: best ``S_n phi`` over ``Per_a(q, M, n)``."""
    g, p, _ = prepare(graph, phi)
    src, dst = g.edge_arrays
    w = p.edge_values(g)
    order = np.argsort(dst, kind="stable")
    s_s, d_s, w_s = src[order], dst[order], w[order]
    counts = np.bincount(d_s, minlength=g.n)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    low = g.level_array <= q
    C = n_max // M
    out = np.full(n_max, -np.inf)
    ia = g.index[a]
    into_a = src[dst == ia]
    w_into = w[dst == ia]
    V = np.full((C + 1, g.n), -np.inf)
    c0 = int(low[ia])
    if c0 > C:
        return out
    V[c0, ia] = 0.0
    for n in range(1, n_max + 1):
        thr = n // M
        best = V[: thr + 1][:, into_a] + w_into
        out[n - 1] = best.max() if best.size else -np.inf
        if n == n_max:
            break
        Y = nm.segment_max(V[:, s_s] + w_s, starts, counts)
        V = np.full_like(Y, -np.inf)
        V[:, ~low] = Y[:, ~low]
        V[1:, low] = Y[:-1, low]
    return out


def beta_infinity(target, phi, t_schedule=(1.0, 2.0, 4.0, 8.0), direct=True, pairs=((20, 20),),
                  n_max=1000, **kw):
    """``beta_inf = lim_t P_inf(t phi) / t`` with a direct max-plus cross-check."""
    rows = []
    for t in t_schedule:
        rep = pressure_at_infinity(target, t * phi, routes=("B",), **kw)
        rows.append((t, rep.value, rep.verdict))
    diag = {"slopes": [[t, (v / t) if v is not None and math.isfinite(v) else v] for t, v, _ in rows]}
    if all(r[2] == "-inf" for r in rows[-2:]):
        value = -math.inf
    elif any(r[2] == "undecided" or r[1] is None for r in rows[-2:]):
        value = None
    else:
        (t1, v1, _), (t2, v2, _) = rows[-2], rows[-1]
        s1, s2 = v1 / t1, v2 / t2
        value = 2 * s2 - s1 if t2 == 2 * t1 else s2
        diag["richardson"] = [s1, s2, value]
    if direct and not isinstance(target, TruncatedGraph) and not (isinstance(target, CmsSpec) and target.is_finite):
        vals = []
        for q, M in pairs:
            g = _truncate(target, n_max)
            mx = log_restricted_max(g, phi, 1, n_max, q, M)
            ns = np.arange(1, n_max + 1)
            sel = (ns >= n_max // 2) & np.isfinite(mx)
            if sel.any():
                vals.append(float((mx[sel] / ns[sel]).max()))
        if vals:
            diag["direct"] = min(vals)
            if value is not None:
                diag["direct_gap"] = abs(min(vals) - value)
    return value, diag


def optimize(spec, phi, N_schedule=(10, 30, 100, 300, 1000), tol=5e-2, **kw):
    """beta along truncations, beta_inf, and the escape / maximiser verdict."""
    if isinstance(spec, TruncatedGraph) or spec.is_finite:
        g = spec if isinstance(spec, TruncatedGraph) else build_truncation(spec)
        rep = beta(g, phi)
        rep.beta_inf = -math.inf
        return rep
    betas = beta_schedule(spec, phi, N_schedule)
    binf, diag = beta_infinity(spec, phi, **kw)
    last = build_truncation(spec, N_schedule[-1])
    rep = beta(last, phi)
    b = betas[-1][1]
    diag["beta_N"] = betas
    diag["monotone_in_N"] = bool(all(y >= x - 1e-12 for (_, x), (_, y) in zip(betas, betas[1:])))
    if binf is None:
        verdict = "undecided"
    elif binf >= b - tol:
        # the truncated maxima are not separated from the escaping level
        verdict = "escape"
    else:
        verdict = "maximizer-found"
    beta_val = max(b, binf) if binf is not None and math.isfinite(binf) else b
    return OptimizationReport(beta_val, binf, rep.cycle if verdict == "maximizer-found" else None,
                              verdict, diag)


@dataclass
class ZeroTemperatureReport:
    ts: list
    integrals: list
    monotone: bool
    distances: list          # cylinder distance between consecutive mu_t
    to_maximizer: list       # cylinder distance to the maximising cycle measure
    beta: float
    measures: list = field(default_factory=list, repr=False)


def zero_temperature(graph, phi, t_schedule=tuple(2.0 ** k for k in range(11)), depth=3):
    """Equilibrium states of ``t phi`` along ``t`` and their approach to a maximising measure."""
    if not isinstance(graph, TruncatedGraph):
        graph = build_truncation(graph) if graph.is_finite else build_truncation(graph, 40)
    opt = beta(graph, phi)
    target = None
    if opt.cycle is not None:
        target = periodic_measure(graph, opt.cycle).cylinder_vector(depth)
    ints, dists, to_max, mus = [], [], [], []
    prev = None
    for t in t_schedule:
        mu = spectral_pressure(graph, t * phi).rpf.measure
        ints.append(mu.integrate(phi))
        vec = mu.cylinder_vector(depth)
        if prev is not None:
            dists.append(cylinder_distance(prev, vec, depth, graph=graph))
        if target is not None:
            to_max.append(cylinder_distance(vec, target, depth, graph=graph))
        prev = vec
        mus.append(mu)
    mono = bool(all(b >= a - 1e-9 for a, b in zip(ints, ints[1:])))
    return ZeroTemperatureReport(list(t_schedule), ints, mono, dists, to_max, opt.beta, mus)
