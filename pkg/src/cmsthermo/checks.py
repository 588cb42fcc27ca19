"""Built-in oracle suite: one check per acceptance criterion.

Each check computes its quantities from scratch and compares them with
reference constants held in :data:`REFERENCE`. ``run_checks(inject=...)``
overrides reference constants, which is how the negative control is run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .inducing import build_induced, discriminant
from .infinity import h_of_roof, pressure_at_infinity, route_a, semicontinuity_check
from .measures import (
    MeasureSequence, escape_sequence, hat_measure, induce_measure, mass_loss_diagnostic, mixture,
    random_markov, renewal_loop_measure,
)
from .optimization import beta, optimize, zero_temperature
from .potentials import (
    constant, edge, indicator, lift_potential, linear_law, log_law, penalty, table, zero,
)
from .pressure import gurevich_estimate, pressure_limit, spectral_pressure, variational_check
from .shifts import (
    build_truncation, full_shift, golden_mean, higher_block_recode, random_finite_shift,
    renewal_shift, star_shift, subdivide_edges, uniform_rome_check,
)
from .suspension import SuspensionSpec, flow_spr_test, suspension_pressure

GOLDEN = (1 + math.sqrt(5)) / 2

REFERENCE = {
    "full_log_sum": math.log(math.pi ** 2 / 6),
    "golden_entropy": math.log(GOLDEN),
    "renewal_entropy": math.log(2),
    "renewal_pinf": 0.0,
    "beta_golden": 0.5,
    "beta_inf_renewal": 1.0,
    "ztl_integral": 0.5,
    "flow_constant_roof": math.log(2) / 2,
    "flow_margin_renewal": math.log(2),
}


@dataclass
class CheckResult:
    cid: int
    name: str
    passed: bool
    summary: str
    elapsed: float
    data: dict = field(default_factory=dict)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.cid:>2} {self.name}: {self.summary} ({self.elapsed:.1f} s)"


@dataclass
class _Check:
    cid: int
    name: str
    families: tuple
    fn: object


CHECKS = []


def _check(cid, name, families):
    def deco(fn):
        CHECKS.append(_Check(cid, name, tuple(families), fn))
        return fn
    return deco


def _random_edge_potential(rng, graph, scale=1.0):
    return table({e: float(rng.uniform(-scale, scale)) for e in graph.edges}, name="random")


# 1 -------------------------------------------------------------------------------


@_check(1, "closed-form full-shift pressure", ("full",))
def _c1(ref):
    t = time.perf_counter()
    rep = pressure_limit(full_shift(), log_law(2.0), N_schedule=(100, 1000, 10_000))
    dt = time.perf_counter() - t
    err = abs(rep.value - ref["full_log_sum"])
    ok = err <= 1e-3 and dt < 10
    return ok, f"|P - log(pi^2/6)| = {err:.2e} <= 1e-3, {dt:.2f} s < 10 s", {"value": rep.value}


# 2 -------------------------------------------------------------------------------


@_check(2, "golden-mean entropy", ("golden",))
def _c2(ref):
    g = build_truncation(golden_mean())
    t = time.perf_counter()
    sp_val = spectral_pressure(g, zero()).value
    t_sp = time.perf_counter() - t
    t = time.perf_counter()
    gur = gurevich_estimate(g, zero(), n_max=60)
    t_gu = time.perf_counter() - t
    e1 = abs(sp_val - ref["golden_entropy"])
    e2 = abs(gur.value - ref["golden_entropy"])
    ok = e1 <= 1e-9 and e2 <= 1e-3 and t_sp < 1 and t_gu < 1
    return ok, (f"spectral err {e1:.1e} <= 1e-9, periodic-sum err {e2:.1e} <= 1e-3, "
                f"{t_sp:.3f} s / {t_gu:.3f} s < 1 s"), {"spectral": sp_val, "gurevich": gur.value}


# 3 -------------------------------------------------------------------------------


@_check(3, "renewal pressure by periodic sums and discriminant", ("renewal",))
def _c3(ref):
    gur = gurevich_estimate(renewal_shift(), zero(), N_schedule=(10, 20, 30, 40))
    disc = discriminant(build_induced(renewal_shift(), zero()))
    e1 = abs(gur.value - ref["renewal_entropy"])
    e2 = abs(disc.implied_pressure - ref["renewal_entropy"])
    ok = e1 <= 1e-3 and e2 <= 1e-9
    return ok, f"periodic-sum err {e1:.1e} <= 1e-3, discriminant err {e2:.1e} <= 1e-9", {
        "gurevich": gur.value, "discriminant": disc.implied_pressure}


# 4 -------------------------------------------------------------------------------


def _route_gap(ra, rb):
    va, vb = ra.get("value"), rb.get("value")
    if va is None or vb is None:
        return math.inf
    if math.isinf(va) or math.isinf(vb):
        return 0.0 if va == vb else math.inf
    return abs(va - vb)


@_check(4, "pressure at infinity: restricted sums vs penalised limit", ("renewal", "finite"))
def _c4(ref):
    t = time.perf_counter()
    rows = []
    rep = pressure_at_infinity(renewal_shift(), zero())
    rows.append(("renewal", rep.route_a.get("value"), rep.route_b.get("value"),
                 _route_gap(rep.route_a, rep.route_b)))
    rows.append(("renewal-truth", rep.route_b.get("value"), ref["renewal_pinf"],
                 abs(rep.route_b.get("value") - ref["renewal_pinf"])))
    rng = np.random.default_rng(20240601)
    for k in range(3):
        spec = random_finite_shift(rng, 6)
        g = build_truncation(spec)
        phi = _random_edge_potential(rng, g)
        r = pressure_at_infinity(spec, phi)
        rows.append((f"random-{k}", r.route_a.get("value"), r.route_b.get("value"),
                     _route_gap(r.route_a, r.route_b)))
    dt = time.perf_counter() - t
    worst = max(r[3] for r in rows)
    ok = worst <= 5e-2 and dt < 60
    return ok, f"max route gap {worst:.3g} <= 5e-2 over {len(rows)} cases, {dt:.1f} s < 60 s", {"rows": rows}


# 5 -------------------------------------------------------------------------------


@_check(5, "uniform Rome forces P_inf = -inf", ("star", "renewal"))
def _c5(ref):
    ra = route_a(star_shift(), zero(), pairs=((1, 3),))
    rome = uniform_rome_check(star_shift(), {1}, 1)
    # the other side of the dichotomy: no uniform Rome, escape possible
    rome_r = uniform_rome_check(renewal_shift(), {1}, 1)
    empty = ra["verdict"] == "-inf" and ra["pairs"][0]["status"] == "empty-certified"
    ok = empty and rome.holds and rome.exact and not rome_r.holds
    return ok, (f"star (q=1, M=3) restricted sets empty: {empty}; star Rome({{1}}, 1): {rome.holds}; "
                f"renewal Rome({{1}}, 1): {rome_r.holds}"), {"route_a": ra}


# 6 -------------------------------------------------------------------------------


def _builtin_small():
    out = [("golden", build_truncation(golden_mean())), ("full-2", build_truncation(full_shift(2)))]
    for N in (10, 50):
        out.append((f"full-N{N}", build_truncation(full_shift(), N)))
        out.append((f"renewal-N{N}", build_truncation(renewal_shift(), N)))
        out.append((f"star-N{N}", build_truncation(star_shift(), N)))
    return out


@_check(6, "variational principle on small truncations", ("golden", "full", "renewal", "star"))
def _c6(ref):
    rng = np.random.default_rng(7)
    worst, gap = -math.inf, 0.0
    names = []
    for name, g in _builtin_small():
        if g.n > 50:
            continue
        for phi in (zero(), _random_edge_potential(rng, g)):
            rep = variational_check(g, phi, n_measures=1000, rng=rng)
            worst = max(worst, rep.worst_excess)
            gap = max(gap, rep.equilibrium_gap)
        names.append(name)
    ok = worst <= 1e-9 and gap <= 1e-8
    return ok, f"max excess {worst:.2e} <= 1e-9, equilibrium gap {gap:.1e} <= 1e-8 on {len(names)} graphs", {
        "graphs": names}


# 7 -------------------------------------------------------------------------------


@_check(7, "Kac, Abramov, hat-measure and recoding identities", ("full", "golden", "renewal"))
def _c7(ref):
    rng = np.random.default_rng(11)
    kac, abr, abr_sub, hat_def, rec = 0.0, 0.0, 0.0, 0.0, 0.0
    graphs = [build_truncation(full_shift(2)), build_truncation(golden_mean()),
              build_truncation(renewal_shift(), 10)]
    for g in graphs:
        measures = [spectral_pressure(g, zero()).rpf.measure, random_markov(g, rng)]
        for mu in measures:
            ind = induce_measure(mu, 1, L=200, tail_tol=1e-13)
            kac = max(kac, abs(ind.kac_product - 1.0))
            abr = max(abr, ind.abramov_gap)
            roof = {e: int(rng.integers(1, 4)) for e in g.edges}
            hat = hat_measure(mu, subdivide_edges(g, roof), check_depth=3)
            abr_sub = max(abr_sub, hat.entropy_gap)
            hat_def = max(hat_def, hat.max_cylinder_defect)
        phi = _random_edge_potential(rng, g)
        for m in (2, 3):
            hg, to_base = higher_block_recode(g, m)
            rec = max(rec, abs(spectral_pressure(hg, lift_potential(phi, m, to_base)).value
                               - spectral_pressure(g, phi).value))
    ok = kac <= 1e-9 and abr <= 1e-8 and abr_sub <= 1e-10 and hat_def <= 1e-12 and rec <= 1e-12
    return ok, (f"Kac {kac:.1e} <= 1e-9, Abramov induced {abr:.1e} <= 1e-8, subdivided {abr_sub:.1e} <= 1e-10, "
                f"cylinders {hat_def:.1e} <= 1e-12, recoding {rec:.1e} <= 1e-12"), {}


# 8 -------------------------------------------------------------------------------


def renewal_roof():
    """Roof on the renewal shift: ``min(k, 10)`` on ``1 -> k`` and 1 on ``k -> k-1``."""
    return edge(lambda a, b: float(min(b, 10)) if a == 1 else 1.0, name="min(k,10)")


@_check(8, "entropy at infinity of a subdivision vs h(tau)", ("renewal",))
def _c8(ref):
    tau = renewal_roof()
    sub = lambda N: subdivide_edges(build_truncation(renewal_shift(), N), tau)
    d_inf = pressure_at_infinity(sub, zero(), routes=("A",)).value
    h = h_of_roof(renewal_shift(), tau)["value"]
    err = abs(d_inf - h)
    return err <= 5e-2, f"delta_inf(subdivided) = {d_inf:.4f}, h(tau) = {h:.4f}, gap {err:.3f} <= 5e-2", {
        "delta_inf": d_inf, "h_tau": h}


# 9 -------------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _loops(n, width, s):
    ks = np.arange(n, n + width)
    return renewal_loop_measure(ks, np.exp(-s * (ks - n)))


def _deep(width, s, start):
    return MeasureSequence(lambda n: _loops(n, width, s), 0.0, None, name=f"deep({width},{s})", start=start)


def _shifted(seq, start):
    return MeasureSequence(seq.generator, seq.lam, seq.limit, seq.name, start)


@lru_cache(maxsize=None)
def _renewal_equilibrium():
    ks = np.arange(1, 61)
    return renewal_loop_measure(ks, 2.0 ** -ks.astype(float))


def semicontinuity_cases(rng, count=200, start=100):
    """Converging sequences on the renewal family and on random finite graphs.

    Every sequence is read on the same window ``n = start, start+1, ...``.
    Returns ``(label, seq, phi, p_inf)`` tuples; ``p_inf`` is the conservative
    (upper) estimate of the pressure at infinity.
    """
    rng = np.random.default_rng(rng)
    g10 = build_truncation(renewal_shift(), 10)
    pots = [zero(), 0.3 * indicator((1,)), -0.5 * indicator((1,))]
    pinf = [pressure_at_infinity(renewal_shift(), p).conservative for p in pots]
    finite = []
    for k in range(4):
        spec = random_finite_shift(rng, 6)
        g = build_truncation(spec)
        finite.append((g, _random_edge_potential(rng, g)))
    cases = []
    for i in range(count):
        if i % 4 == 3:
            g, phi = finite[(i // 4) % len(finite)]
            mu, nu = random_markov(g, rng), random_markov(g, rng)
            kind = int(rng.integers(3))
            if kind == 0:
                seq = escape_sequence(None, "constant", {"mu": mu})
            elif kind == 1:
                seq = _shifted(escape_sequence(None, "perturbation", {"mu": mu, "nu": nu,
                                                                      "rate": float(rng.uniform(0.2, 0.9))}), start)
            else:
                lam = float(rng.uniform(0.1, 0.9))
                seq = MeasureSequence(lambda n, lam=lam, mu=mu, nu=nu: mixture([(lam, mu), (1 - lam, nu)]),
                                      1.0, mixture([(lam, mu), (1 - lam, nu)]), name="fixed-mix")
            cases.append((f"finite-{kind}", seq, phi, -math.inf))
            continue
        j = int(rng.integers(len(pots)))
        phi, p_inf = pots[j], pinf[j]
        width = int(rng.integers(1, 5))
        s = float(rng.choice([0.0, 0.3]))
        kind = int(rng.integers(4))
        mu = random_markov(g10, rng) if rng.random() < 0.5 else _renewal_equilibrium()
        if kind == 0:
            seq = _deep(width, s, start)
        elif kind == 1:
            lam = float(rng.uniform(0.05, 0.95))
            seq = _shifted(escape_sequence(renewal_shift(), "convex-combination",
                                           {"lam": lam, "mu": mu, "inner": _deep(width, s, start)}), start)
        elif kind == 2:
            nu = random_markov(g10, rng)
            seq = _shifted(escape_sequence(renewal_shift(), "perturbation",
                                           {"mu": mu, "nu": nu, "rate": float(rng.uniform(0.2, 0.9))}), start)
        else:
            seq = escape_sequence(renewal_shift(), "constant", {"mu": mu})
        cases.append((f"renewal-{kind}", seq, phi, p_inf))
    return cases


@_check(9, "upper semi-continuity and its sharpness", ("renewal", "finite"))
def _c9(ref):
    cases = semicontinuity_cases(2024, 200)
    slacks = [semicontinuity_check(seq, phi, p_inf, prefix=50).slack for _, seq, phi, p_inf in cases]
    worst = min(slacks)
    # sharpness: equilibrium mixed with deep loops
    p_inf = pressure_at_infinity(renewal_shift(), zero()).conservative
    sharp = escape_sequence(renewal_shift(), "convex-combination",
                            {"lam": 0.5, "mu": _renewal_equilibrium(), "inner": _deep(1, 0.0, 100)})
    sharp = _shifted(sharp, 100)
    s_slack = semicontinuity_check(sharp, zero(), p_inf, prefix=50).slack
    ok = worst >= -1e-3 and 0 <= s_slack < 5e-2
    return ok, (f"min slack {worst:.2e} >= -1e-3 over {len(slacks)} sequences, "
                f"sharpness slack {s_slack:.3f} < 5e-2"), {"min_slack": worst, "sharp_slack": s_slack}


# 10 ------------------------------------------------------------------------------


@_check(10, "ergodic optimisation and zero temperature", ("golden", "renewal"))
def _c10(ref):
    g = build_truncation(golden_mean())
    b = beta(g, indicator((1,)))
    e1 = abs(b.beta - ref["beta_golden"])
    opt = optimize(renewal_shift(), constant(1.0) - penalty())
    bn = [v for _, v in opt.diagnostics["beta_N"]]
    mono = all(y >= x for x, y in zip(bn, bn[1:]))
    e2 = abs(opt.beta_inf - ref["beta_inf_renewal"]) if opt.beta_inf is not None else math.inf
    z = zero_temperature(g, indicator((1,)))
    e3 = abs(z.integrals[-1] - ref["ztl_integral"])
    ok = (e1 <= 1e-12 and mono and 1 - bn[-1] < 1e-2 and e2 <= 1e-3 and opt.verdict == "escape"
          and e3 <= 1e-3)
    return ok, (f"beta golden err {e1:.0e}; renewal beta_N {bn[0]:.3f}..{bn[-1]:.4f} increasing, "
                f"beta_inf err {e2:.1e} <= 1e-3, verdict {opt.verdict}; ztl err at t=2^10 {e3:.1e} <= 1e-3"), {
        "beta_N": bn, "beta_inf": opt.beta_inf}


# 11 ------------------------------------------------------------------------------


def suspension_specs():
    rng = np.random.default_rng(5)
    spec = random_finite_shift(rng, 6)
    g = build_truncation(spec)
    roof = table({e: float(rng.uniform(0.5, 2.0)) for e in g.edges}, name="random-roof")
    return [
        ("full-2/const-2", SuspensionSpec(build_truncation(full_shift(2)), constant(2.0))),
        ("renewal/const-1", SuspensionSpec(renewal_shift(), constant(1.0))),
        ("full/x1", SuspensionSpec(full_shift(), linear_law(-1.0))),
        ("star/x1", SuspensionSpec(star_shift(), linear_law(-1.0))),
        ("golden/1+1[1]", SuspensionSpec(build_truncation(golden_mean()), constant(1.0) + indicator((1,)))),
        ("random/random", SuspensionSpec(g, roof, _random_edge_potential(rng, g))),
    ]


@_check(11, "suspension flow pressure", ("full", "renewal", "star", "golden", "finite"))
def _c11(ref):
    resid = 0.0
    vals = {}
    for name, s in suspension_specs():
        rep = suspension_pressure(s)
        vals[name] = rep.value
        resid = max(resid, rep.diagnostics["root_residual"])
        for row in rep.diagnostics.get("truncations", []):
            resid = max(resid, row[2])
    e1 = abs(vals["full-2/const-2"] - ref["flow_constant_roof"])
    _, info = flow_spr_test(SuspensionSpec(renewal_shift(), constant(1.0)))
    e2 = abs(info["margin"] - ref["flow_margin_renewal"])
    ok = e1 <= 1e-9 and resid <= 1e-8 and e2 <= 1e-6 and info["spr"]
    return ok, (f"constant roof err {e1:.1e} <= 1e-9, max root residual {resid:.1e} <= 1e-8, "
                f"renewal flow SPR margin {info['margin']:.6f} (log 2 err {e2:.1e})"), {"values": vals}


# 12 ------------------------------------------------------------------------------


@_check(12, "mass-loss diagnostic separates escape from tightness", ("renewal", "full"))
def _c12(ref):
    ks = (2, 4, 8)
    esc = mass_loss_diagnostic(escape_sequence(renewal_shift(), "deep-loops", {"width": 1}), ks, prefix=50)
    tight = mass_loss_diagnostic(escape_sequence(full_shift(), "truncated-equilibria",
                                                 {"phi": log_law(2.0), "n0": 10}), ks, prefix=50)
    sep = esc.double_limit - tight.double_limit
    return sep >= 0.5, (f"tail mass at k={ks[-1]}: escaping {esc.double_limit:.3f}, "
                        f"tight {tight.double_limit:.3f}, separation {sep:.3f} >= 0.5"), {
        "escape": esc.limsup, "tight": tight.limsup}


# runner ----------------------------------------------------------------------------


def select(families=None, ids=None):
    out = []
    for c in sorted(CHECKS, key=lambda c: c.cid):
        if ids is not None and c.cid not in ids:
            continue
        if families is not None and not set(families) & set(c.families):
            continue
        out.append(c)
    return out


def run_check(c, inject=None):
    ref = dict(REFERENCE)
    ref.update(inject or {})
    t = time.perf_counter()
    try:
        ok, summary, data = c.fn(ref)
    except Exception as exc:  # a crashing check is a failing check
        ok, summary, data = False, f"error: {type(exc).__name__}: {exc}", {}
    return CheckResult(c.cid, c.name, bool(ok), summary, time.perf_counter() - t, data)


def run_checks(families=None, ids=None, inject=None, echo=None):
    """Run the selected checks; ``echo`` is called with each result line."""
    results = []
    for c in select(families, ids):
        r = run_check(c, inject)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results
