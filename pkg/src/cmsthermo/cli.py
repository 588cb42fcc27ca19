"""Command-line runner.

::

    cmsthermo run --config FILE [--out DIR] [--threads K] [--seed S]
    cmsthermo verify [--families LIST]
    cmsthermo dump-graph --family F --N n

Exit codes: 0 conclusive (or all checks passed), 1 invalid input or a
failed check, 2 undecided verdict.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import cache, reports
from .inducing import CensusOverflow
from .potentials import (
    constant, indicator, linear_law, log_law, penalty, table, zero,
)
from .shifts import (
    FAMILIES, CmsSpec, DegenerateTruncation, build_truncation, dump_truncation, random_finite_shift,
)

KINDS = ("pressure", "pinf", "sinf", "discriminant", "spr", "beta", "ztl", "suspend", "rome", "semicont")
SCHEDULE_KEYS = ("N", "n", "t", "q", "M")
EXIT_OK, EXIT_FAIL, EXIT_UNDECIDED = 0, 1, 2


class ConfigError(ValueError):
    """Invalid config; ``path`` names the failing field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


# config ----------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    kind: str
    graph: dict
    potential: dict = field(default_factory=lambda: {"type": "zero"})
    roof: dict | None = None
    schedules: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "graph": self.graph, "potential": self.potential, "roof": self.roof,
                "schedules": self.schedules, "params": self.params, "seed": self.seed,
                "output": self.output}


def load_config(path):
    path = Path(path)
    text = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError("<file>", f"cannot parse {path.name}: {exc}") from exc
    return validate(raw)


def _need(d, key, path, types):
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    v = d[key]
    if not isinstance(v, types) or isinstance(v, bool) and bool not in _tuple(types):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected {_names(types)}, got {type(v).__name__}")
    return v


def _tuple(t):
    return t if isinstance(t, tuple) else (t,)


def _names(types):
    return " or ".join(t.__name__ for t in _tuple(types))


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(v).__name__}")
    return v


def _validate_graph(g):
    if not isinstance(g, dict):
        raise ConfigError("graph", "expected a table")
    fam = _need(g, "family", "graph", str)
    if fam not in FAMILIES and fam != "random":
        raise ConfigError("graph.family", f"unknown family {fam!r}; choose from {sorted(FAMILIES) + ['random']}")
    if fam == "finite":
        edges = _need(g, "edges", "graph", list)
        for i, e in enumerate(edges):
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool)
                                                                 for x in e)):
                raise ConfigError(f"graph.edges[{i}]", "expected a pair of integers")
        if not edges:
            raise ConfigError("graph.edges", "empty edge list")
    if fam == "full" and "k" in g:
        k = _need(g, "k", "graph", int)
        if k < 1:
            raise ConfigError("graph.k", "must be positive")
    if fam == "random":
        n = g.get("n", 6)
        if not isinstance(n, int) or n < 1:
            raise ConfigError("graph.n", "must be a positive integer")
        d = _number(g.get("density", 0.35), "graph.density")
        if not 0 <= d <= 1:
            raise ConfigError("graph.density", "must lie in [0, 1]")
    if "N" in g:
        N = _need(g, "N", "graph", int)
        if N < 1:
            raise ConfigError("graph.N", "must be positive")
    return g


POTENTIAL_TYPES = ("zero", "constant", "log_law", "linear_law", "indicator", "table", "penalty", "sum")


def _validate_potential(p, path):
    if not isinstance(p, dict):
        raise ConfigError(path, "expected a table")
    typ = _need(p, "type", path, str)
    if typ not in POTENTIAL_TYPES:
        raise ConfigError(f"{path}.type", f"unknown potential {typ!r}; choose from {list(POTENTIAL_TYPES)}")
    if "scale" in p:
        _number(p["scale"], f"{path}.scale")
    if typ == "constant":
        _number(_need(p, "value", path, (int, float)), f"{path}.value")
    elif typ == "log_law":
        _number(_need(p, "beta", path, (int, float)), f"{path}.beta")
    elif typ == "linear_law":
        _number(_need(p, "rate", path, (int, float)), f"{path}.rate")
    elif typ == "indicator":
        w = _need(p, "word", path, list)
        if not w or not all(isinstance(x, int) for x in w):
            raise ConfigError(f"{path}.word", "expected a non-empty list of symbols")
    elif typ == "table":
        entries = _need(p, "entries", path, list)
        lens = set()
        for i, e in enumerate(entries):
            if not (isinstance(e, list) and len(e) >= 2):
                raise ConfigError(f"{path}.entries[{i}]", "expected [symbols..., value]")
            _number(e[-1], f"{path}.entries[{i}]")
            lens.add(len(e) - 1)
        if len(lens) > 1:
            raise ConfigError(f"{path}.entries", "all words must have the same length")
    elif typ == "sum":
        terms = _need(p, "terms", path, list)
        for i, t in enumerate(terms):
            _validate_potential(t, f"{path}.terms[{i}]")
    return p


def _validate_schedules(s):
    if not isinstance(s, dict):
        raise ConfigError("schedules", "expected a table")
    for key, val in s.items():
        path = f"schedules.{key}"
        if key == "prefix":
            if not isinstance(val, int) or val < 10:
                raise ConfigError(path, "must be an integer >= 10")
            continue
        if key not in SCHEDULE_KEYS:
            raise ConfigError(path, f"unknown schedule; choose from {list(SCHEDULE_KEYS) + ['prefix']}")
        if not isinstance(val, list) or not val:
            raise ConfigError(path, "expected a non-empty list")
        for i, x in enumerate(val):
            _number(x, f"{path}[{i}]")
        for i in range(1, len(val)):
            if not val[i] > val[i - 1]:
                raise ConfigError(path, f"must be strictly increasing (entry {i}: {val[i]} after {val[i - 1]})")
    if "q" in s and "M" in s and len(s["q"]) != len(s["M"]):
        raise ConfigError("schedules.M", "q and M must have the same length")
    return s


def validate(raw):
    """Check a raw config mapping and return an :class:`ExperimentConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    known = {"kind", "graph", "potential", "roof", "schedules", "params", "seed", "output"}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown field")
    kind = _need(raw, "kind", "", str)
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment {kind!r}; choose from {list(KINDS)}")
    graph = _validate_graph(raw.get("graph"))
    pot = _validate_potential(raw.get("potential", {"type": "zero"}), "potential")
    roof = raw.get("roof")
    if kind == "suspend":
        if roof is None:
            raise ConfigError("roof", "missing (required for suspend)")
        _validate_potential(roof, "roof")
    elif roof is not None:
        _validate_potential(roof, "roof")
    sched = _validate_schedules(raw.get("schedules", {}))
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params", "expected a table")
    if kind == "rome":
        F = params.get("F", [1])
        if not isinstance(F, list) or not all(isinstance(x, int) for x in F):
            raise ConfigError("params.F", "expected a list of symbols")
        if not isinstance(params.get("bound", 1), int):
            raise ConfigError("params.bound", "expected an integer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "expected an integer")
    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output", "expected a table")
    return ExperimentConfig(kind, graph, pot, roof, sched, params, seed, out)


# builders ----------------------------------------------------------------------------


def build_spec(g, seed=0):
    fam = g["family"]
    if fam == "finite":
        return FAMILIES["finite"]([tuple(e) for e in g["edges"]])
    if fam == "full":
        return FAMILIES["full"](g.get("k"))
    if fam == "random":
        return random_finite_shift(np.random.default_rng(seed), g.get("n", 6), g.get("density", 0.35))
    return FAMILIES[fam]()


def build_target(cfg):
    """Family spec, or a fixed truncation when ``graph.N`` is given."""
    spec = build_spec(cfg.graph, cfg.seed)
    if "N" in cfg.graph:
        return build_truncation(spec, cfg.graph["N"])
    return spec


def build_potential(p):
    typ = p["type"]
    if typ == "zero":
        phi = zero()
    elif typ == "constant":
        phi = constant(p["value"])
    elif typ == "log_law":
        phi = log_law(p["beta"], p.get("c", 0.0))
    elif typ == "linear_law":
        phi = linear_law(p["rate"], p.get("c", 0.0))
    elif typ == "indicator":
        phi = indicator(tuple(p["word"]))
    elif typ == "table":
        phi = table({tuple(e[:-1]): e[-1] for e in p["entries"]}, default=p.get("default"))
    elif typ == "penalty":
        phi = penalty()
    else:
        terms = [build_potential(t) for t in p["terms"]]
        phi = terms[0]
        for t in terms[1:]:
            phi = phi + t
    if "scale" in p:
        phi = float(p["scale"]) * phi
    return phi


# experiments --------------------------------------------------------------------------


def _sched(cfg, key, default):
    v = cfg.schedules.get(key)
    return tuple(v) if v is not None else default


def _graph_of(target, N):
    return target if not isinstance(target, CmsSpec) else (
        build_truncation(target) if target.is_finite else build_truncation(target, N))


def _exp_pressure(cfg, target, phi, pool):
    from .pressure import default_schedule, pressure_limit, spectral_pressure

    if not isinstance(target, CmsSpec) or target.is_finite:
        rep = pressure_limit(target, phi) if not isinstance(target, CmsSpec) else \
            spectral_pressure(build_truncation(target), phi)
        rows = [[rep.schedules.get("N", [None])[-1], rep.value]]
        return rep.to_dict(), rep.verdict != "undecided", {"pressure": (["N", "value"], rows)}
    Ns = _sched(cfg, "N", tuple(default_schedule(target)))
    vals = list(pool.map(lambda N: spectral_pressure(build_truncation(target, int(N)), phi).value, Ns))
    rep = pressure_limit(target, phi, N_schedule=Ns)
    return rep.to_dict(), rep.verdict != "undecided", {"pressure": (["N", "value"], [[N, v] for N, v in zip(Ns, vals)])}


def _pairs(cfg):
    from .infinity import DEFAULT_PAIRS

    if "q" in cfg.schedules:
        return tuple(zip(cfg.schedules["q"], cfg.schedules.get("M", cfg.schedules["q"])))
    return DEFAULT_PAIRS


def _exp_pinf(cfg, target, phi, pool):
    from .infinity import T_SCHEDULE, pressure_at_infinity

    rep = pressure_at_infinity(target, phi, pairs=_pairs(cfg), t_schedule=_sched(cfg, "t", T_SCHEDULE))
    tabs = {
        "restricted_sums": (["q", "M", "n_max", "value", "status"],
                            [[r["q"], r["M"], r["n_max"], r["value"], r["status"]]
                             for r in rep.route_a.get("pairs", [])]),
        "penalized": (["t", "value"], rep.route_b.get("trail", [])),
    }
    return rep.to_dict(), rep.verdict != "undecided", tabs


def _exp_sinf(cfg, target, phi, pool):
    from .infinity import s_infinity

    res = s_infinity(target, phi)
    return res, not res.get("undecided_at"), {}


def _exp_discriminant(cfg, target, phi, pool):
    from .inducing import build_induced, discriminant

    rep = discriminant(build_induced(target, phi, cfg.params.get("a", 1)))
    return rep.to_dict(), rep.classification != "undecided", {}


def _exp_spr(cfg, target, phi, pool):
    from .infinity import spr_test

    verdict, info = spr_test(target, phi, pairs=_pairs(cfg))
    return {"spr": verdict, **info}, verdict is not None, {}


def _exp_beta(cfg, target, phi, pool):
    from .optimization import optimize

    Ns = _sched(cfg, "N", (10, 30, 100, 300, 1000))
    rep = optimize(target, phi, N_schedule=tuple(int(N) for N in Ns))
    tabs = {"beta": (["N", "beta"], rep.diagnostics.get("beta_N", []))}
    return rep.to_dict(), rep.verdict != "undecided", tabs


def _exp_ztl(cfg, target, phi, pool):
    from .optimization import zero_temperature

    ts = _sched(cfg, "t", tuple(2.0 ** k for k in range(11)))
    g = _graph_of(target, int(cfg.params.get("N", 40)))
    rep = zero_temperature(g, phi, t_schedule=ts, depth=int(cfg.params.get("depth", 3)))
    res = {"t": rep.ts, "integrals": rep.integrals, "monotone": rep.monotone, "beta": rep.beta,
           "distances": rep.distances, "to_maximizer": rep.to_maximizer}
    rows = [[t, v, d] for t, v, d in zip(rep.ts, rep.integrals, rep.to_maximizer or [None] * len(rep.ts))]
    return res, True, {"ztl": (["t", "integral", "distance_to_maximizer"], rows)}


def _exp_suspend(cfg, target, phi, pool):
    from .suspension import SuspensionSpec, flow_report

    roof = build_potential(cfg.roof)
    res = flow_report(SuspensionSpec(target, roof, phi, bool(cfg.params.get("phi_bounded", True))))
    return res, res["spr"] is not None, {}


def _exp_rome(cfg, target, phi, pool):
    from .shifts import uniform_rome_check

    v = uniform_rome_check(target, set(cfg.params.get("F", [1])), int(cfg.params.get("bound", 1)))
    return {"holds": v.holds, "exact": v.exact, "longest": v.longest}, v.exact, {}


def _exp_semicont(cfg, target, phi, pool):
    from .infinity import pressure_at_infinity, semicontinuity_check
    from .measures import MeasureSequence, escape_sequence, mixture, random_markov

    prefix = int(cfg.schedules.get("prefix", 50))
    start = int(cfg.params.get("start", 100))
    lam = float(cfg.params.get("lam", 0.0))
    rng = np.random.default_rng(cfg.seed)
    if not isinstance(target, CmsSpec):
        raise ConfigError("graph", "semicont needs a family, not a fixed truncation")
    if target.is_finite:
        g = build_truncation(target)
        mu, nu = random_markov(g, rng), random_markov(g, rng)
        rate = float(cfg.params.get("rate", 0.5))
        seq = escape_sequence(None, "perturbation", {"mu": mu, "nu": nu, "rate": rate})
        seq = MeasureSequence(seq.generator, seq.lam, seq.limit, seq.name, start)
        p_inf = -math.inf
    else:
        if target.family != "renewal":
            raise ConfigError("graph.family", "semicont sequences on infinite families need the renewal shift")
        width = int(cfg.params.get("width", 1))
        deep = escape_sequence(target, "deep-loops", {"width": width})
        deep = MeasureSequence(deep.generator, 0.0, None, deep.name, start)
        if lam > 0:
            from .pressure import spectral_pressure
            mu = spectral_pressure(build_truncation(target, int(cfg.params.get("N", 40))), phi).rpf.measure
            seq = MeasureSequence(lambda n: mixture([(lam, mu), (1 - lam, deep[n])]), lam, mu, "mix", start)
        else:
            seq = deep
        p_inf = pressure_at_infinity(target, phi).conservative
    rep = semicontinuity_check(seq, phi, p_inf, prefix=prefix)
    res = {"lhs": rep.lhs, "rhs": rep.rhs, "slack": rep.slack, "tail_moves": rep.tolerance,
           "prefix": rep.prefix, "p_inf": p_inf, "sequence": seq.name}
    return res, True, {}


EXPERIMENTS = {
    "pressure": _exp_pressure, "pinf": _exp_pinf, "sinf": _exp_sinf, "discriminant": _exp_discriminant,
    "spr": _exp_spr, "beta": _exp_beta, "ztl": _exp_ztl, "suspend": _exp_suspend, "rome": _exp_rome,
    "semicont": _exp_semicont,
}


def run(cfg, out_dir=None, threads=1, cache_dir=None, timestamp=None):
    """Run one experiment; returns ``(report, exit_code, written_paths)``."""
    target = build_target(cfg)
    phi = build_potential(cfg.potential)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool, cache.use(cache_dir):
        result, conclusive, tables = EXPERIMENTS[cfg.kind](cfg, target, phi, pool)
    verdict = "conclusive" if conclusive else "undecided"
    report = reports.make_report(cfg.kind, cfg.to_dict(), result, verdict, timestamp)
    written = []
    if out_dir is not None:
        out = Path(out_dir)
        stem = cfg.output.get("name", cfg.kind)
        written.append(reports.write_json(out / f"{stem}.json", report))
        if cfg.output.get("csv", True):
            for name, (header, rows) in tables.items():
                written.append(reports.write_csv(out / f"{stem}_{name}.csv", header, rows))
    return report, EXIT_OK if conclusive else EXIT_UNDECIDED, written


# entry point ----------------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="cmsthermo", description="Thermodynamic formalism experiments on "
                                 "countable Markov shifts.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a TOML or JSON config")
    r.add_argument("--config", required=True, help="config file (.toml or .json)")
    r.add_argument("--out", default=None, help="output directory for JSON and CSV files")
    r.add_argument("--threads", type=int, default=1, help="worker threads for schedule points")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--no-cache", action="store_true", help="do not read or write the sum cache")
    v = sub.add_parser("verify", help="run the built-in oracle suite")
    v.add_argument("--families", default=None,
                   help="comma-separated family tags (full, golden, renewal, star, finite); default all")
    v.add_argument("--ids", default=None, help="comma-separated check numbers")
    v.add_argument("--inject", action="append", default=[], metavar="NAME=VALUE",
                   help="override a reference constant (negative control)")
    d = sub.add_parser("dump-graph", help="print the canonical dump of a truncation")
    d.add_argument("--family", required=True, choices=sorted(FAMILIES))
    d.add_argument("--N", type=int, required=True)
    d.add_argument("--edges", default=None, help="edge list 'a-b,c-d' for the finite family")
    return ap


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.seed is not None:
        cfg.seed = args.seed
    cache_dir = None if args.no_cache else cache.default_dir()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", cache.CacheWarning)
            report, code, written = run(cfg, args.out, args.threads, cache_dir)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DegenerateTruncation as exc:
        print(f"degenerate truncation: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CensusOverflow as exc:
        print(f"return-word census too large: {exc}; lower schedules.n", file=sys.stderr)
        return EXIT_FAIL
    if written:
        for p in written:
            print(p)
    else:
        sys.stdout.write(reports.dumps(report))
    return code


def _parse_inject(items):
    out = {}
    for it in items:
        name, _, val = it.partition("=")
        if not val:
            raise ValueError(f"bad --inject {it!r}; expected NAME=VALUE")
        out[name.strip()] = float(val)
    return out


def _cmd_verify(args):
    from .checks import REFERENCE, run_checks

    families = None
    if args.families is not None:
        families = [f.strip() for f in args.families.split(",") if f.strip()]
        if not families:
            print("no families selected; nothing to check")
            return EXIT_OK
    ids = None if args.ids is None else {int(x) for x in args.ids.split(",") if x.strip()}
    try:
        inject = _parse_inject(args.inject)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAIL
    unknown = set(inject) - set(REFERENCE)
    if unknown:
        print(f"unknown reference constant(s): {sorted(unknown)}", file=sys.stderr)
        return EXIT_FAIL
    results = run_checks(families, ids, inject, echo=lambda s: print(s, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    for r in failed:
        print(f"failed: {r.cid} {r.name}")
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_dump(args):
    if args.family == "finite":
        if not args.edges:
            print("--edges is required for the finite family", file=sys.stderr)
            return EXIT_FAIL
        edges = [tuple(int(x) for x in e.split("-")) for e in args.edges.split(",")]
        spec = FAMILIES["finite"](edges)
    else:
        spec = FAMILIES[args.family]()
    try:
        g = build_truncation(spec, args.N)
    except DegenerateTruncation as exc:
        print(f"degenerate truncation: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(dump_truncation(g))
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    return {"run": _cmd_run, "verify": _cmd_verify, "dump-graph": _cmd_dump}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
