"""Suspension flows over a countable Markov shift.

The flow is described by its roof ``tau`` (``inf tau > 0``) and by the
integrated flow potential ``Delta`` (a potential on the base). Flow pressure
is the root of ``t -> P(Delta - t tau)``, which is strictly decreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .infinity import InfinityReport, _finite_target, _pinf_value
from .measures import CylinderVector, cylinder_distance
from .potentials import Potential, zero
from .pressure import PressureReport, default_schedule, pressure_limit, spectral_pressure
from .shifts import CmsSpec, TruncatedGraph, build_truncation


@dataclass
class SuspensionSpec:
    """Base shift, roof and integrated flow potential.

    ``phi_bounded`` records the (unchecked) assumption that the flow
    potential itself is bounded on the flow space.
    """

    base: object
    roof: Potential
    delta: Potential = field(default_factory=zero)
    phi_bounded: bool = True

    def roof_floor(self, graph):
        return float(self.roof.edge_values(graph).min()) if self.roof.depth <= 2 else math.nan


def _pressure_at(target, phi):
    """Extended-real pressure on a graph or a family."""
    if isinstance(target, TruncatedGraph):
        return spectral_pressure(target, phi).value
    rep = pressure_limit(target, phi)
    if rep.verdict == "finite":
        return rep.value
    if rep.verdict == "divergent":
        return math.inf
    return math.nan


def _root(f, lo=-50.0, hi=50.0, xtol=1e-12):
    """Root of a decreasing extended-real function (``+inf`` allowed on the left)."""
    while not f(hi) < 0:
        hi = 2 * hi if hi > 0 else 1.0
        if hi > 1e6:
            return None, "divergent"
    flo = f(lo)
    while not flo > 0:
        lo = 2 * lo if lo < 0 else -1.0
        if lo < -1e6:
            return None, "undecided"
        flo = f(lo)
    if math.isnan(flo):
        return None, "undecided"
    # bisect across any infinite region until both ends are finite
    while not math.isfinite(flo):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if math.isnan(fm):
            return None, "undecided"
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < xtol:
            return lo, "finite"
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500), "finite"


def suspension_pressure(sspec, N_schedule=None):
    """Flow pressure ``inf{t : P(Delta - t tau) <= 0}``.

    On a family the root is found on each truncation of the schedule and,
    where a tail law exists, for the infinite system itself.
    """
    base = sspec.base
    f_of = lambda target: (lambda t: _pressure_at(target, sspec.delta - t * sspec.roof))
    trail = []
    if isinstance(base, TruncatedGraph) or (isinstance(base, CmsSpec) and base.is_finite):
        g = base if isinstance(base, TruncatedGraph) else build_truncation(base)
        root, verdict = _root(f_of(g))
        resid = abs(f_of(g)(root)) if root is not None else None
        return PressureReport(root, "spectral-root", verdict, schedules={"N": [g.N]},
                              diagnostics={"root_residual": resid}, estimate=root if root is not None else math.nan)
    Ns = tuple(N_schedule or default_schedule(base))
    for N in Ns:
        g = build_truncation(base, N)
        r, v = _root(f_of(g))
        trail.append([int(N), r, abs(f_of(g)(r)) if r is not None else None])
    diag = {"truncations": trail}
    r, v = _root(f_of(base))
    if r is not None:
        diag["root_residual"] = abs(f_of(base)(r))
        return PressureReport(r if v == "finite" else None, "closed-form-root", v,
                              schedules={"N": list(Ns)}, diagnostics=diag, estimate=r)
    last = trail[-1][1]
    return PressureReport(None, "spectral-root", "undecided", schedules={"N": list(Ns)},
                          diagnostics=diag, estimate=last if last is not None else math.nan)


def suspension_pressure_at_infinity(sspec, tol=1e-4, **kw):
    """Flow pressure at infinity ``inf{t : P_inf(Delta - t tau) <= 0}``.

    Bisection on the sign of ``P_inf(Delta - t tau)``; the bracket width
    ``tol`` is the reported resolution.
    """
    base = sspec.base
    if isinstance(base, TruncatedGraph) or _finite_target(base):
        return InfinityReport(-math.inf, "-inf", "compact", notes=["compact base"])
    g = lambda t: _pinf_value(base, sspec.delta - t * sspec.roof, **kw)
    lo, hi = -50.0, 50.0
    vlo = g(lo)
    if vlo == -math.inf:
        return InfinityReport(-math.inf, "-inf", "bisection", notes=["P_inf = -inf on the bracket"])
    if math.isnan(vlo):
        return InfinityReport(None, "undecided", "bisection")
    if sspec.roof.constant is not None:
        # P_inf(Delta - t c) = P_inf(Delta) - t c
        p0 = g(0.0)
        if math.isnan(p0):
            return InfinityReport(None, "undecided", "constant-roof")
        if not math.isfinite(p0):
            return InfinityReport(p0, "+inf" if p0 > 0 else "-inf", "constant-roof")
        return InfinityReport(p0 / sspec.roof.constant, "finite", "constant-roof")
    while g(hi) > 0:
        hi *= 2
        if hi > 1e6:
            return InfinityReport(math.inf, "+inf", "bisection")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = g(mid)
        if math.isnan(v):
            return InfinityReport(None, "undecided", "bisection", notes=[f"bracket {lo} {hi}"])
        if v > 0:
            lo = mid
        else:
            hi = mid
    return InfinityReport(0.5 * (lo + hi), "finite", "bisection", gap=hi - lo)


@dataclass
class FlowMeasureView:
    """Flow measure ``lam * (mu x Leb) / int tau dmu`` seen through base cylinders."""

    mu: object
    roof: Potential
    lam: float = 1.0
    graph: TruncatedGraph | None = None

    @property
    def mean_roof(self):
        return self.mu.integrate(self.roof)

    def window(self):
        g = self.graph or getattr(self.mu, "graph", None)
        return float(self.roof.edge_values(g).min())

    def free_energy(self, delta):
        return (self.mu.entropy() + self.mu.integrate(delta)) / self.mean_roof


def flow_cylinder_masses(view, depth, c=None):
    """``nu(C x [0, c]) = lam * c * mu(C) / int tau dmu`` for cylinders up to ``depth``."""
    c = view.window() if c is None else c
    if view.lam == 0:
        return CylinderVector(depth, {}, 0.0)
    base = view.mu.cylinder_vector(depth)
    factor = view.lam * c / view.mean_roof
    return CylinderVector(depth, {w: factor * m for w, m in base.entries.items()}, factor * base.lam)


def flow_distance(v1, v2, depth, graph=None, c=None):
    """Cylinder distance between flow views (common window height ``c``)."""
    c = c if c is not None else min(v1.window(), v2.window())
    return cylinder_distance(flow_cylinder_masses(v1, depth, c), flow_cylinder_masses(v2, depth, c),
                             depth, graph=graph)


def flow_spr_test(sspec, tol=1e-6, N=None, **kw):
    """Flow SPR: ``P_theta - P_theta_inf > 2 tol`` and an equilibrium witness."""
    P = suspension_pressure(sspec)
    Pinf = suspension_pressure_at_infinity(sspec, **kw)
    out = {"P_theta": P.value, "P_theta_inf": Pinf.value}
    if P.verdict != "finite" or Pinf.verdict == "undecided":
        out["spr"] = None
        return None, out
    margin = P.value - Pinf.value
    out["margin"] = margin
    spr = bool(margin > 2 * tol)
    out["spr"] = spr
    base = sspec.base
    if isinstance(base, TruncatedGraph):
        g = base
    elif base.is_finite:
        g = build_truncation(base)
    else:
        g = build_truncation(base, N or max(default_schedule(base)))
    if spr and g.n <= 5000:
        rep = spectral_pressure(g, sspec.delta - P.value * sspec.roof)
        view = FlowMeasureView(rep.rpf.measure, sspec.roof, 1.0, g)
        fe = view.free_energy(sspec.delta)
        out["witness_free_energy"] = fe
        out["witness_gap"] = abs(fe - P.value)
        out["witness_truncation"] = g.N
    return spr, out


def flow_report(sspec, **kw):
    """Flow summary: ``P_theta``, ``P_theta_inf``, ``h_inf_theta``, SPR and margin."""
    spr, info = flow_spr_test(sspec, **kw)
    h_inf = None
    if sspec.delta.constant == 0.0:
        h_inf = info.get("P_theta_inf")
    return {"P_theta": info.get("P_theta"), "P_theta_inf": info.get("P_theta_inf"),
            "h_inf_theta": h_inf, "spr": spr, "margin": info.get("margin"), "details": info}
