"""Pressure at infinity, s_inf, h(tau), SPR tests and the semi-continuity harness.

Two independent routes estimate ``P_inf(phi)``:

Route A (restricted sums)
    growth rate of ``Z_n(phi, a; q, M)``, the weighted count of period-n
    points in ``[a]`` that spend at most ``n/M`` of their time in the low
    symbols ``{level <= q}``; infimum over a ``(q, M)`` schedule.
Route B (penalised limit)
    ``lim_t P(phi - t V)`` with ``V = 1/level(x_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _numerics as nm
from . import cache
from .potentials import penalty
from .pressure import (PressureReport, pressure_limit, prepare, spectral_pressure,
                       tail_law_pressure)
from .shifts import CmsSpec, TruncatedGraph, build_truncation, uniform_rome_check

DEFAULT_PAIRS = ((5, 5), (10, 10), (20, 20))
T_SCHEDULE = tuple(2.0 ** k for k in range(11))
FLOOR = -50.0


@dataclass
class InfinityReport:
    """Pressure at infinity with both route trails.

    ``verdict`` is ``finite``, ``-inf``, ``+inf`` or ``undecided``; ``value``
    is a float (``+-inf`` allowed) or ``None`` when undecided.
    """

    value: float | None
    verdict: str
    route: str
    route_a: dict = field(default_factory=dict)
    route_b: dict = field(default_factory=dict)
    gap: float | None = None
    notes: list = field(default_factory=list)

    @property
    def conservative(self):
        """Largest finite route value (an upper estimate), or the verdict value."""
        vals = [r.get("value") for r in (self.route_a, self.route_b)
                if r.get("verdict") == "finite" and r.get("value") is not None]
        if vals:
            return max(vals)
        return self.value

    def to_dict(self):
        return {"value": self.value, "verdict": self.verdict, "route": self.route,
                "route_a": self.route_a, "route_b": self.route_b, "gap": self.gap,
                "notes": self.notes}


# truncation helpers ----------------------------------------------------------------


def _is_finite_system(graph):
    """True when the graph is the whole system, not a truncation of an infinite one."""
    if graph.subdivision is not None:
        return _is_finite_system(graph.subdivision.base)
    if graph.spec is None:
        return True
    return graph.spec.is_finite


def _truncate(target, N):
    if isinstance(target, TruncatedGraph):
        return target
    if callable(target) and not isinstance(target, CmsSpec):
        return target(N)
    return build_truncation(target, N)


def _has_tail_law(target, phi):
    if not isinstance(target, CmsSpec) or target.is_finite:
        return False
    if target.family == "full":
        return phi.depth == 1 and phi.tail is not None
    return target.family in ("renewal", "star") and phi.depth <= 2


def _finite_target(target):
    if isinstance(target, TruncatedGraph):
        return _is_finite_system(target)
    if isinstance(target, CmsSpec):
        return target.is_finite
    return False


# Route A ----------------------------------------------------------------------


def log_restricted_sums(graph, phi, a, n_max, q, M):
    """``log Z_n(phi, a; q, M)`` for ``n = 1..n_max``.

    Dynamic programme over (count of low visits, current vertex); a visit
    is low when the level of the symbol is at most ``q``, and period-n points
    may have at most ``floor(n/M)`` low visits among ``x_1..x_n``.
    """
    g, p, _ = prepare(graph, phi)
    lw = p.edge_values(g)
    return cache.cached("Zqm", g, lw, (a, n_max, q, M), n_max,
                        lambda: _log_restricted_sums(g, lw, a, n_max, q, M))


def _log_restricted_sums(g, lw, a, n_max, q, M):
    src, dst = g.edge_arrays
    shift = float(lw.max())
    low = g.level_array <= q
    # low states first so the count shift acts on a contiguous block
    perm = np.argsort(~low, kind="stable")
    pos = np.empty(g.n, dtype=np.int64)
    pos[perm] = np.arange(g.n)
    n_low = int(low.sum())
    WT = sp.csr_array((np.exp(lw - shift), (pos[dst], pos[src])), shape=(g.n, g.n))
    if a in g.index:
        starts = [g.index[a]]
    else:
        starts = [i for i, v in enumerate(g.vertices) if isinstance(v, tuple) and v[0] == a]
    C = n_max // M
    out = np.full(n_max, -np.inf)
    for s0 in starts:
        c0 = int(low[s0])
        if c0 > C:
            continue
        # closing weights into the start vertex
        into = dst == s0
        close_idx, close_w = pos[src[into]], np.exp(lw[into] - shift)
        V = np.zeros((g.n, C + 1))
        V[pos[s0], c0] = 1.0
        scale = 0.0
        for n in range(1, n_max + 1):
            thr = n // M
            tot = float(close_w @ V[close_idx, : thr + 1].sum(axis=1))
            if tot > 0:
                val = math.log(tot) + scale + n * shift
                out[n - 1] = np.logaddexp(out[n - 1], val)
            if n == n_max:
                break
            V = WT @ V
            if n_low:
                V[:n_low, 1:] = V[:n_low, :-1].copy()
                V[:n_low, 0] = 0.0
            m = V.max()
            if m <= 0:
                break
            V /= m
            scale += math.log(m)
    return out


def restricted_partition_sum(graph, phi, a, n, q, M):
    return float(math.exp(log_restricted_sums(graph, phi, a, n, q, M)[-1]))


def _pair_nmax(q, M, n_cap):
    return int(min(max(400, 5 * q * M), n_cap))


def _empty_certified(target, graph, q, M):
    """Whether empty restricted sets at (q, M) prove ``P_inf = -inf``."""
    if _finite_target(target):
        return q >= graph.level_array.max()
    if isinstance(target, CmsSpec) and target.family == "star":
        verdict = uniform_rome_check(target, {1}, 1)
        return bool(verdict.holds and verdict.exact and q >= 1 and M > 2)
    return False


def route_a(target, phi, a=1, pairs=DEFAULT_PAIRS, n_cap=2000, n_max=None):
    """Restricted-sums estimate ``inf_{(q,M)} limsup_n (1/n) log Z_n(phi, a; q, M)``."""
    rows = []
    best = math.inf
    certified = False
    for q, M in pairs:
        nm_ = n_max or _pair_nmax(q, M, n_cap)
        g = _truncate(target, nm_)
        lz = log_restricted_sums(g, phi, a, nm_, q, M)
        ns = np.arange(1, nm_ + 1)
        upper = ns >= nm_ // 2
        vals = lz[upper] / ns[upper]
        if np.isfinite(vals).any():
            v = float(np.max(vals[np.isfinite(vals)]))
            rows.append({"q": q, "M": M, "n_max": nm_, "value": v, "status": "finite"})
            best = min(best, v)
        elif _empty_certified(target, g, q, M):
            rows.append({"q": q, "M": M, "n_max": nm_, "value": -math.inf, "status": "empty-certified"})
            best = -math.inf
            certified = True
        else:
            rows.append({"q": q, "M": M, "n_max": nm_, "value": None, "status": "inconclusive"})
    if certified:
        return {"value": -math.inf, "verdict": "-inf", "pairs": rows}
    if best == math.inf:
        return {"value": None, "verdict": "undecided", "pairs": rows}
    return {"value": best, "verdict": "finite", "pairs": rows}


# Route B ----------------------------------------------------------------------


def _pressure_value(target, phi, N):
    """Extended-real pressure used by Route B."""
    if isinstance(target, CmsSpec) and _has_tail_law(target, phi):
        res = tail_law_pressure(target, phi)
        if res is not None:
            val, verdict, _ = res
            if verdict == "finite":
                return val
            if verdict == "divergent":
                return math.inf
            return math.nan
    g = _truncate(target, N)
    return spectral_pressure(g, phi).value


def route_b(target, phi, t_schedule=T_SCHEDULE, N=40, stop=1e-4, floor=FLOOR):
    """Penalised limit ``lim_t P(phi - t V)``."""
    V = penalty()
    rows = []
    prev = None
    for t in t_schedule:
        val = _pressure_value(target, phi - t * V, N)
        rows.append([float(t), val])
        if val == math.inf:
            continue
        if math.isnan(val):
            return {"value": None, "verdict": "undecided", "trail": rows}
        if val < floor:
            return {"value": -math.inf, "verdict": "-inf", "trail": rows}
        if prev is not None and abs(prev - val) < stop:
            return {"value": val, "verdict": "finite", "trail": rows}
        prev = val
    last = rows[-1][1]
    if last == math.inf:
        return {"value": math.inf, "verdict": "+inf", "trail": rows}
    return {"value": last, "verdict": "finite", "trail": rows, "stopped": "schedule end"}


def pressure_at_infinity(target, phi, a=1, pairs=DEFAULT_PAIRS, t_schedule=T_SCHEDULE,
                         n_cap=2000, N=40, routes=("A", "B")):
    """Pressure at infinity by both routes.

    The reported value comes from Route B when the system is finite or has a
    family tail law, and from Route A otherwise (spectral pressures of plain
    truncations drift to ``-inf`` under the penalty and are not trusted).
    """
    ra = route_a(target, phi, a, pairs, n_cap) if "A" in routes else {}
    rb = route_b(target, phi, t_schedule, N) if "B" in routes else {}
    notes = []
    trust_b = _finite_target(target) or (isinstance(target, CmsSpec) and _has_tail_law(target, phi))
    if not trust_b and rb:
        notes.append("route B on plain truncations is not trusted for the reported value")
    if ra.get("verdict") == "-inf":
        # certified empty restricted sets are a proof, whatever route B says
        main, route = ra, "restricted-sums"
        if rb.get("verdict") not in (None, "-inf"):
            notes.append("route B disagrees with a certified -inf; P(phi) may be infinite")
    elif rb and (trust_b or not ra) and not (rb.get("verdict") == "undecided" and ra.get("verdict")
                                            not in (None, "undecided")):
        main, route = rb, "penalized-limit"
    else:
        main, route = ra, "restricted-sums"
    gap = None
    if ra.get("verdict") == rb.get("verdict") == "finite":
        gap = abs(ra["value"] - rb["value"])
    elif ra.get("verdict") and ra.get("verdict") == rb.get("verdict"):
        gap = 0.0
    if ra and rb:
        route = route + "+both"
    notes.append("restricted-sums values are upper estimates along a finite (q, M) schedule")
    return InfinityReport(main.get("value"), main.get("verdict", "undecided"), route, ra, rb, gap, notes)


# s_inf and h(tau) ---------------------------------------------------------------


def _finiteness(target, phi):
    if _finite_target(target):
        return "finite"
    rep = pressure_limit(target, phi)
    return rep.verdict


def s_infinity(target, phi, tol=1e-3):
    """``inf{t in [0, 1] : P(t phi) < inf}`` with its bracket."""
    if _finite_target(target):
        return {"value": 0.0, "bracket": (0.0, 0.0), "exact": True}
    if isinstance(target, CmsSpec) and target.family == "full" and phi.depth == 1 and phi.tail is not None:
        alpha, beta, _ = phi.tail
        if alpha < 0:
            return {"value": 0.0, "bracket": (0.0, 0.0), "exact": True}
        if alpha == 0 and beta < 0:
            s = min(1.0, 1.0 / -beta)
            return {"value": s, "bracket": (s, s), "exact": True}
    if _finiteness(target, 0.0 * phi) == "finite":
        return {"value": 0.0, "bracket": (0.0, 0.0), "exact": False}
    if _finiteness(target, phi) != "finite":
        raise ValueError("P(phi) is not finite")
    lo, hi = 0.0, 1.0
    undecided = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = _finiteness(target, mid * phi)
        if v == "finite":
            hi = mid
        elif v == "divergent":
            lo = mid
        else:
            undecided.append(mid)
            break
    return {"value": 0.5 * (lo + hi), "bracket": (lo, hi), "exact": False, "undecided_at": undecided}


def _pinf_value(target, phi, **kw):
    # inside root searches a trusted, conclusive Route B settles the value;
    # Route A can only override it with a certified -inf (finite or star)
    if (isinstance(target, CmsSpec) and not target.is_finite and target.family != "star"
            and "routes" not in kw and _has_tail_law(target, phi)):
        rep = pressure_at_infinity(target, phi, routes=("B",), **kw)
        if rep.verdict != "undecided":
            return rep.value
    rep = pressure_at_infinity(target, phi, **kw)
    if rep.verdict == "undecided":
        return math.nan
    return rep.value


def h_of_roof(target, tau, tol=1e-3, delta=1e-2, **kw):
    """``h(tau) = inf{t >= 0 : P_inf(-t tau) <= 0}`` and the class Psi1/Psi2."""
    s = s_infinity(target, -tau)["value"]
    probe = _pinf_value(target, -(s + delta) * tau, **kw)
    if math.isnan(probe):
        return {"value": None, "class": "undecided", "s_inf": s}
    if probe > 0:
        lo, hi = s + delta, max(2 * (s + delta), 1.0)
        while _pinf_value(target, -hi * tau, **kw) > 0:
            hi *= 2
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _pinf_value(target, -mid * tau, **kw) > 0:
                lo = mid
            else:
                hi = mid
        return {"value": 0.5 * (lo + hi), "class": "Psi1", "s_inf": s, "bracket": (lo, hi)}
    return {"value": s, "class": "Psi2", "s_inf": s, "probe": probe}


# SPR --------------------------------------------------------------------------------


def spr_test(target, phi, tol=1e-6, **kw):
    """SPR as ``P(phi) - P_inf(phi) > 2 tol``; returns ``(verdict, info)``."""
    if isinstance(target, TruncatedGraph):
        P = spectral_pressure(target, phi).value
        pv = "finite"
    else:
        rep = pressure_limit(target, phi)
        P, pv = rep.value, rep.verdict
    if pv != "finite":
        return None, {"P": P, "verdict": pv}
    inf_rep = pressure_at_infinity(target, phi, **kw)
    if inf_rep.verdict == "undecided":
        return None, {"P": P, "P_inf": None}
    pinf = inf_rep.conservative if inf_rep.verdict == "finite" else inf_rep.value
    margin = P - pinf
    return bool(margin > 2 * tol), {"P": P, "P_inf": pinf, "margin": margin,
                                    "P_inf_report": inf_rep.to_dict()}


# semi-continuity ---------------------------------------------------------------------


@dataclass
class SemicontinuityReport:
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    prefix: int


def semicontinuity_check(seq, phi, p_inf, prefix=50, window=0.25):
    """Compare ``limsup F(mu_n)`` with ``lam F(mu) + (1 - lam) P_inf``.

    ``F`` is the free energy ``h + int phi``; the limsup is the maximum over
    the last ``window`` fraction of the prefix.
    """
    if prefix < 10:
        raise ValueError("prefix must be at least 10")
    if p_inf is None or (isinstance(p_inf, float) and math.isnan(p_inf)):
        raise ValueError("pressure at infinity is inconclusive")
    start = int(math.floor(prefix * (1 - window)))
    vals = [mu.free_energy(phi) for mu in seq.prefix(prefix)]
    lhs = max(vals[start:])
    lam = seq.lam
    rhs = 0.0
    if lam > 0:
        rhs += lam * seq.limit.free_energy(phi)
    if lam < 1:
        rhs += (1 - lam) * p_inf
    tail_moves = float(np.abs(np.diff(vals[start:])).max()) if len(vals) - start > 1 else 0.0
    return SemicontinuityReport(float(lhs), float(rhs), float(rhs - lhs), tail_moves, prefix)
