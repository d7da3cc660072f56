"""Command-line surface: one flat subcommand per analysis operation.

Every run resolves its full configuration (including the seed), embeds it in
the output, and writes either CSV (with a leading config comment) or JSON.
Identical configuration and seed give byte-identical output; there is no
timestamping or machine-dependent content.  Exit codes: 0 success / check
passed, 1 property violation or failed check, 2 usage or configuration
error.  SYMDYN_THREADS caps the worker threads of the enumeration engine.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from typing import Optional

from . import counterexample as cx
from . import entropydim as ed
from . import metricspace as ms
from . import netgraph as ng
from . import symsys as ss


def parse_vertex(text: str):
    """'5' -> 5, '1,-2' -> (1, -2)."""
    parts = text.split(",")
    if len(parts) == 1:
        return int(parts[0])
    return tuple(int(p) for p in parts)


def parse_window(text: str):
    return [parse_vertex(p) for p in text.split(";") if p]


def vertex_str(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(a) for a in v)
    return str(v)


def _graph_from_args(args) -> ng.Digraph:
    if getattr(args, "graph_file", None):
        with open(args.graph_file) as fh:
            return ng.graph_from_descriptor(json.load(fh))
    desc = {"family": args.family}
    if getattr(args, "D", None) is not None:
        desc["D"] = args.D
    if getattr(args, "E", None) is not None:
        desc["E"] = args.E
    return ng.graph_from_descriptor(desc)


def _system_from_args(args):
    if getattr(args, "system_file", None):
        with open(args.system_file) as fh:
            return ss.system_from_descriptor(json.load(fh))
    desc = {"system": args.system}
    if getattr(args, "m", None):
        desc["m"] = [int(p) for p in args.m.split(",")]
    if getattr(args, "alphabet", None) is not None:
        desc["alphabet"] = args.alphabet
    if getattr(args, "universe", None):
        desc["universe"] = args.universe
    return ss.system_from_descriptor(desc)


def _emit(args, config: dict, header: list, rows: list, summary: dict) -> None:
    out = _sys.stdout if args.out is None else open(args.out, "w")
    try:
        if args.format == "json":
            payload = {"config": config, "rows": rows, "summary": summary}
            out.write(json.dumps(payload, sort_keys=True, default=vertex_str))
            out.write("\n")
        else:
            out.write("# config: " + json.dumps(config, sort_keys=True, default=vertex_str) + "\n")
            out.write("# summary: " + json.dumps(summary, sort_keys=True, default=vertex_str) + "\n")
            out.write(",".join(header) + "\n")
            for row in rows:
                out.write(",".join(_csv_cell(row.get(h)) for h in header) + "\n")
    finally:
        if out is not _sys.stdout:
            out.close()


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "|".join(vertex_str(v) for v in value)
    return vertex_str(value)


def _config(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_graph_ball(args) -> int:
    g = _graph_from_args(args)
    center = parse_vertex(args.center)
    sizes = g.ball_sizes([center], args.radius)
    rows = [{"r": r, "size": s} for r, s in enumerate(sizes)]
    summary = {"graph": g.universe, "center": vertex_str(center)}
    if args.members:
        ball = ng.in_ball(g, [center], args.radius)
        summary["members"] = [vertex_str(v) for v in ball.members]
    _emit(args, _config(args, ["family", "D", "E", "center", "radius"]),
          ["r", "size"], rows, summary)
    return 0


def cmd_graph_dim(args) -> int:
    g = _graph_from_args(args)
    v = parse_vertex(args.vertex)
    est = ng.dim_estimate(g, v, args.rmin, args.rmax)
    rows = [
        {"r": r, "ball_size": s, "exponent": e}
        for r, s, e in zip(est.radii, est.ball_sizes, est.pointwise_exponents)
    ]
    summary = {
        "fit_slope": est.fit_slope,
        "lower_proxy": est.lower_proxy,
        "upper_proxy": est.upper_proxy,
        "window": [args.rmin, args.rmax],
    }
    _emit(args, _config(args, ["family", "D", "E", "vertex", "rmin", "rmax"]),
          ["r", "ball_size", "exponent"], rows, summary)
    return 0


def cmd_graph_speed(args) -> int:
    g = _graph_from_args(args)
    v = parse_vertex(args.vertex)
    delta = parse_vertex(args.shift)
    tau = ng.shift_tau(delta)
    rep = ng.speed_estimate(g, tau, v, args.nmax, args.cap)
    rows = [
        {"n": n + 1, "value": val}
        for n, val in enumerate(rep["values"])
    ]
    summary = {"inf_proxy": rep["inf_proxy"], "unknown": rep["unknown_count"],
               "cap": args.cap}
    _emit(args, _config(args, ["family", "D", "E", "vertex", "shift", "nmax", "cap"]),
          ["n", "value"], rows, summary)
    return 0


def cmd_sys_propagation(args) -> int:
    sys_, _space = _system_from_args(args)
    v = parse_vertex(args.vertex)
    rho = ss.propagation(sys_, v, args.T)
    rows = [{"t": t, "rho": r} for t, r in enumerate(rho)]
    _emit(args, _config(args, ["system", "m", "alphabet", "vertex", "T"]),
          ["t", "rho"], rows, {"vertex": vertex_str(v), "horizon": args.T})
    return 0


def cmd_sys_panorama(args) -> int:
    sys_, space = _system_from_args(args)
    window = parse_window(args.window)
    result = ss.panorama(sys_, space, window, args.T,
                         max_patterns=args.max_patterns)
    rows = [
        {"t": t, "layer_size": len(layer), "layer": layer}
        for t, layer in enumerate(result.layers)
    ]
    summary = {
        "cone_size": len(result.cone),
        "pattern_count": result.pattern_count,
        "engine": result.engine,
    }
    _emit(args, _config(args, ["system", "m", "alphabet", "window", "T"]),
          ["t", "layer_size", "layer"], rows, summary)
    return 0


def cmd_sys_equicontinuity(args) -> int:
    sys_, _space = _system_from_args(args)
    window = parse_window(args.window)
    rep = ss.equicontinuity_envelope(sys_, window, args.tprobe, args.rcap)
    rows = [{"t": t, "cone_size": s} for t, s in enumerate(rep.cone_sizes)]
    summary = {
        "certified": rep.certified,
        "envelope": list(rep.envelope) if rep.envelope else None,
        "reach": rep.reach,
        "trajectory_count": rep.trajectory_count,
        "reason": rep.reason,
    }
    _emit(args, _config(args, ["system", "m", "window", "tprobe", "rcap"]),
          ["t", "cone_size"], rows, summary)
    return 0


def cmd_sys_odometer_chain(args) -> int:
    sys_, space = _system_from_args(args)
    windows = [parse_window(w) for w in args.windows.split("|")]
    try:
        chain = ss.odometer_factor_chain(sys_, space, windows, args.horizon)
    except ss.NotEquicontinuousError as exc:
        print(f"not equicontinuous: {exc}", file=_sys.stderr)
        return 1
    rows = [
        {
            "window": c["window"],
            "envelope": c["envelope"],
            "trajectories": c["trajectory_count"],
            "shift_is_permutation": c["shift_is_permutation"],
        }
        for c in chain
    ]
    ok = all(c["shift_is_permutation"] for c in chain)
    _emit(args, _config(args, ["system", "m", "windows", "horizon"]),
          ["window", "envelope", "trajectories", "shift_is_permutation"], rows,
          {"all_permutations": ok})
    return 0 if ok else 1


def cmd_entropy_ball(args) -> int:
    sys_, space = _system_from_args(args)
    v = parse_vertex(args.vertex)
    est = ed.ball_entropy(space, sys_.graph, v, args.rmin, args.rmax)
    rows = [
        {"r": r, "log2_count": c, "ball_size": s, "ratio": ratio}
        for r, c, s, ratio in zip(
            est.radii, est.log2_counts, est.ball_sizes, est.ratios
        )
    ]
    _emit(args, _config(args, ["system", "m", "vertex", "rmin", "rmax"]),
          ["r", "log2_count", "ball_size", "ratio"], rows,
          {"lower_proxy": est.lower_proxy, "upper_proxy": est.upper_proxy})
    return 0


def cmd_entropy_tau(args) -> int:
    sys_, space = _system_from_args(args)
    base = parse_window(args.base)
    delta = parse_vertex(args.shift)
    prof = ed.tau_entropy_profile(space, ng.shift_tau(delta), base, args.nmax)
    rows = [
        {"n": n, "log2_count": c, "value": v, "region_size": s}
        for n, c, v, s in zip(
            prof["n"], prof["log2_counts"], prof["values"], prof["region_sizes"]
        )
    ]
    _emit(args, _config(args, ["system", "m", "base", "shift", "nmax"]),
          ["n", "log2_count", "value", "region_size"], rows,
          {"final_value": prof["values"][-1]})
    return 0


def cmd_cex_roundtrip(args) -> int:
    rep = cx.cex_roundtrip(args.J, args.trials, args.seed)
    rows = [
        {"trial": f["trial"], "seed": f["seed"],
         "mismatches": len(f["mismatches"])}
        for f in rep["failures"]
    ]
    if args.dump_trace:
        import random as _random

        trial_seed = args.seed * 1_000_003  # trial 0 of this run
        x0 = cx.random_initial(args.J, _random.Random(trial_seed))
        trace = cx.simulate_trace(x0, args.J)
        with open(args.dump_trace, "w") as fh:
            fh.write("# config: " + json.dumps(
                {"J": args.J, "seed": args.seed, "trial_seed": trial_seed},
                sort_keys=True) + "\n")
            fh.write("t,a,b\n")
            for t, (a, b) in enumerate(trace.observations):
                fh.write(f"{t},{a},{b}\n")
    _emit(args, _config(args, ["J", "trials", "seed"]),
          ["trial", "seed", "mismatches"], rows,
          {"passed": rep["passed"], "trials": rep["trials"]})
    return 0 if rep["passed"] else 1


def cmd_cex_propagation(args) -> int:
    rep = cx.cex_propagation_profile(args.T)
    rows = [
        {"t": t, "rho": r, "floor": f}
        for t, (r, f) in enumerate(zip(rep["rho"], rep["floors"]))
    ]
    _emit(args, _config(args, ["T"]), ["t", "rho", "floor"], rows,
          {"lower_bound_ok": rep["lower_bound_ok"]})
    return 0 if rep["lower_bound_ok"] else 1


def _metric_from_args(args, graph) -> ms.BasedMetric:
    if getattr(args, "metric_file", None):
        with open(args.metric_file) as fh:
            return ms.metric_from_descriptor(json.load(fh), graph)
    estuary = parse_window(args.estuary)
    if args.scheme == "doubleexp":
        scheme = ms.CoefficientScheme.double_exponential(estuary)
    elif args.coeffs:
        coeffs = [float(c) for c in args.coeffs.split(",")]
        scheme = ms.CoefficientScheme.finite(estuary, coeffs)
    else:
        scheme = ms.CoefficientScheme.finite(
            estuary, [2.0 ** (-j) for j in range(len(estuary))]
        )
    return ms.BasedMetric(scheme=scheme, lam=args.lam, graph=graph)


def cmd_metric_dim(args) -> int:
    sys_, space = _system_from_args(args)
    metric = _metric_from_args(args, sys_.graph)
    eps_grid = [2.0 ** (-k) for k in range(args.eps_min_pow, args.eps_max_pow + 1,
                                           args.eps_step)]
    rep = ms.metric_dim_estimate(space, metric, eps_grid)
    rows = [
        {
            "eps": r["eps"],
            "scale": r["scale"],
            "log2_cover_lower": r["log2_cover_lower"],
            "log2_cover_upper": r["log2_cover_upper"],
        }
        for r in rep["rows"]
    ]
    _emit(args, _config(args, ["system", "m", "estuary", "lam", "scheme",
                               "eps_min_pow", "eps_max_pow", "eps_step"]),
          ["eps", "scale", "log2_cover_lower", "log2_cover_upper"], rows,
          {"lower_slope": rep["lower_slope"], "upper_slope": rep["upper_slope"]})
    return 0


def cmd_metric_lipschitz(args) -> int:
    sys_, space = _system_from_args(args)
    metric = _metric_from_args(args, sys_.graph)
    rep = ms.lipschitz_report(sys_, metric, space, args.samples, args.seed,
                              r_cap=args.rcap)
    rows = [{"sample": f["sample"], "ratio_hi": f["ratio_hi"]} for f in rep["flagged"]]
    _emit(args, _config(args, ["system", "m", "estuary", "lam", "samples",
                               "seed", "rcap"]),
          ["sample", "ratio_hi"], rows,
          {"max_ratio_hi": rep["max_ratio_hi"], "skipped": rep["skipped"],
           "within_lambda": rep["within_lambda"]})
    return 0 if rep["within_lambda"] else 1


def cmd_holder_check(args) -> int:
    sys_, space = _system_from_args(args)
    metric_from = _metric_from_args(args, sys_.graph)
    scheme = ms.CoefficientScheme.finite(
        metric_from.scheme.vertices, metric_from.scheme.coeffs
    )
    metric_to = ms.BasedMetric(scheme=scheme, lam=args.lam2, graph=sys_.graph)
    domain = set()
    for u in metric_from.scheme.vertices:
        domain |= sys_.graph.ball_members([u], args.rcap)
    rep = ms.holder_report(
        lambda x: x, metric_from, metric_to, args.eta, args.constant,
        space, domain, args.samples, args.seed
    )
    rows = []
    if rep["worst"]:
        rows.append({"sample": rep["worst"]["sample"],
                     "cell": rep["worst"]["cell"]})
    _emit(args, _config(args, ["system", "m", "estuary", "lam", "lam2", "eta",
                               "constant", "samples", "seed", "rcap"]),
          ["sample", "cell"], rows,
          {"holds": rep["holds"], "violations": rep["violations"],
           "inconclusive": rep["inconclusive"], "passed": rep["passed"]})
    return 0 if rep["passed"] else 1


def _add_common(p):
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)


def _add_graph_flags(p):
    p.add_argument("--family", default="cayley_zd")
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--E", type=int, default=None)
    p.add_argument("--graph-file", default=None)


def _add_system_flags(p):
    p.add_argument("--system", default="full_shift")
    p.add_argument("--m", default=None, help="odometer moduli, comma separated")
    p.add_argument("--alphabet", type=int, default=None)
    p.add_argument("--universe", default=None)
    p.add_argument("--system-file", default=None)


def _add_metric_flags(p):
    p.add_argument("--estuary", default="0")
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--scheme", choices=["finite", "doubleexp"], default="finite")
    p.add_argument("--coeffs", default=None)
    p.add_argument("--metric-file", default=None,
                   help="JSON metric descriptor; overrides the flags above")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symdyn",
        description="Finite-window analysis of symbolic dynamics on digraphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph-ball", help="in-neighbor ball sizes")
    _add_graph_flags(p)
    p.add_argument("--center", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--members", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_graph_ball)

    p = sub.add_parser("graph-dim", help="ball-growth exponent estimate")
    _add_graph_flags(p)
    p.add_argument("--vertex", required=True)
    p.add_argument("--rmin", type=int, default=16)
    p.add_argument("--rmax", type=int, default=64)
    _add_common(p)
    p.set_defaults(fn=cmd_graph_dim)

    p = sub.add_parser("graph-speed", help="subisometry displacement speed")
    _add_graph_flags(p)
    p.add_argument("--vertex", required=True)
    p.add_argument("--shift", required=True, help="translation vector")
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--cap", type=int, default=32)
    _add_common(p)
    p.set_defaults(fn=cmd_graph_speed)

    p = sub.add_parser("sys-propagation", help="light-cone growth at a vertex")
    _add_system_flags(p)
    p.add_argument("--vertex", required=True)
    p.add_argument("--T", type=int, default=16)
    _add_common(p)
    p.set_defaults(fn=cmd_sys_propagation)

    p = sub.add_parser("sys-panorama", help="determined-cell layers of a window")
    _add_system_flags(p)
    p.add_argument("--window", required=True)
    p.add_argument("--T", type=int, default=4)
    p.add_argument("--max-patterns", type=int, default=ss.DEFAULT_PATTERN_CAP)
    _add_common(p)
    p.set_defaults(fn=cmd_sys_panorama)

    p = sub.add_parser("sys-equicontinuity", help="envelope certification")
    _add_system_flags(p)
    p.add_argument("--window", required=True)
    p.add_argument("--tprobe", type=int, default=16)
    p.add_argument("--rcap", type=int, default=16)
    _add_common(p)
    p.set_defaults(fn=cmd_sys_equicontinuity)

    p = sub.add_parser("sys-odometer-chain", help="factor-chain certificate")
    _add_system_flags(p)
    p.add_argument("--windows", required=True, help="windows separated by |")
    p.add_argument("--horizon", type=int, default=8)
    _add_common(p)
    p.set_defaults(fn=cmd_sys_odometer_chain)

    p = sub.add_parser("entropy-ball", help="pattern density over balls")
    _add_system_flags(p)
    p.add_argument("--vertex", required=True)
    p.add_argument("--rmin", type=int, default=2)
    p.add_argument("--rmax", type=int, default=32)
    _add_common(p)
    p.set_defaults(fn=cmd_entropy_ball)

    p = sub.add_parser("entropy-tau", help="pattern growth along a shift orbit")
    _add_system_flags(p)
    p.add_argument("--base", required=True, help="base cells, ; separated")
    p.add_argument("--shift", required=True)
    p.add_argument("--nmax", type=int, default=20)
    _add_common(p)
    p.set_defaults(fn=cmd_entropy_tau)

    p = sub.add_parser("cex-roundtrip", help="simulate+decode round trips")
    p.add_argument("--J", type=int, default=4)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dump-trace", default=None,
                   help="also write trial 0's cell-0 trace as CSV (t,a,b)")
    _add_common(p)
    p.set_defaults(fn=cmd_cex_roundtrip)

    p = sub.add_parser("cex-propagation", help="quadratic cone growth profile")
    p.add_argument("--T", type=int, default=40)
    _add_common(p)
    p.set_defaults(fn=cmd_cex_propagation)

    p = sub.add_parser("metric-dim", help="cylinder-cover dimension bracket")
    _add_system_flags(p)
    _add_metric_flags(p)
    p.add_argument("--eps-min-pow", type=int, default=8)
    p.add_argument("--eps-max-pow", type=int, default=32)
    p.add_argument("--eps-step", type=int, default=2)
    _add_common(p)
    p.set_defaults(fn=cmd_metric_dim)

    p = sub.add_parser("metric-lipschitz", help="one-step expansion ratios")
    _add_system_flags(p)
    _add_metric_flags(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rcap", type=int, default=6)
    _add_common(p)
    p.set_defaults(fn=cmd_metric_lipschitz)

    p = sub.add_parser("holder-check", help="sampled Holder inequality check")
    _add_system_flags(p)
    _add_metric_flags(p)
    p.add_argument("--lam2", type=float, default=4.0)
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--constant", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rcap", type=int, default=8)
    _add_common(p)
    p.set_defaults(fn=cmd_holder_check)

    return parser


def run(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ng.UniverseExhaustionError, ng.MissingOutNeighborsError,
            ss.EnumerationCapError, ss.NetworkConsistencyError,
            ss.InsufficientDomainError, ms.DomainMismatchError,
            ms.ToleranceUnreachableError, cx.HorizonTooShortError,
            ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
