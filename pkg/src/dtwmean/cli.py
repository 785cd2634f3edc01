"""Command-line front end.

Every subcommand prints JSON on stdout and a one-line summary on stderr,
except ``export`` (model text) and ``bench`` (CSV). Exit codes: 0 success
or limit reached, 1 usage or input error, 2 infeasible constraint/length
combination, 3 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .bnb import ConsistencyError, SolverConfig, solve
from .bounds import bound_profile, bounds_report
from .model import FORMULATIONS, InfeasibleModelError, build_model, export_lp, parse_formulation
from .model.ir import ModelError
from .oracle import OracleRefusal, brute_force_mean
from .series import Instance, ParseError, ReductionError, TimeSeries, load_instance, load_ucr, sample_instance
from .warping import GlobalConstraint, InfeasibleError, WarpingError, dtw, path_cost

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CONSISTENCY = 0, 1, 2, 3

# benchmark constraint variants
VARIANTS = {
    "free": GlobalConstraint.none(),
    "wide": GlobalConstraint.itakura("1.5"),
    "narrow": GlobalConstraint.itakura("1.1"),
}
BENCH_HEADER = ["variant", "constraint", "graph", "distance", "gap", "nodes", "seconds", "reps"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# input helpers ---------------------------------------------------------------

def read_series(path) -> TimeSeries:
    """A series file: a JSON list, ``{"values": [...]}``, or plain numbers."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = [float(tok) for tok in text.replace(",", " ").split()]
    if isinstance(data, dict):
        data = data.get("values")
    if not isinstance(data, list) or not data:
        raise ParseError(f"{path}: expected a nonempty list of numbers")
    return TimeSeries(data)


def _constraint(text: Optional[str]) -> Optional[GlobalConstraint]:
    if text is None:
        return None
    try:
        return GlobalConstraint.parse(text)
    except (WarpingError, ValueError) as exc:
        raise UsageError(f"bad --constraint {text!r}: {exc}") from None


def _formulation(text: str) -> tuple[str, str]:
    try:
        return parse_formulation(text)
    except (ModelError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def load_input(args) -> Instance:
    sources = sum(x is not None and x != [] for x in (args.instance, args.series, args.dataset))
    if sources != 1:
        raise UsageError("give exactly one of --instance, --series or --dataset")
    if args.instance:
        inst = load_instance(args.instance)
    elif args.series:
        inst = Instance(tuple(read_series(p) for p in args.series), name=Path(args.series[0]).stem)
    else:
        pool = [row.series for row in load_ucr(args.dataset)]
        inst = sample_instance(pool, args.k, args.m, args.seed)
    c = _constraint(args.constraint)
    return inst.with_constraint(c) if c is not None else inst


def _emit(payload: dict, summary: str) -> None:
    json.dump(payload, sys.stdout, indent=2, default=float)
    sys.stdout.write("\n")
    print(summary, file=sys.stderr)


# subcommands -----------------------------------------------------------------

def cmd_dtw(args) -> int:
    a, b = read_series(args.a), read_series(args.b)
    c = _constraint(args.constraint) or GlobalConstraint.none()
    res = dtw(a.values, b.values, c)
    out = {"distance": res.distance, "cost": res.cost, "constraint": c.label()}
    if args.path:
        out["path"] = [list(v) for v in res.path.vertices]
    _emit(out, f"dtw = {res.distance:.6g} under {c.label()}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    inst = load_input(args)
    profile = bound_profile(inst, inst.constraint, tol=args.tol)
    report = bounds_report(inst, profile, tol=args.tol)
    _emit(report, f"mean values in [{report['lb_imp']:.6g}, {report['ub_imp']:.6g}], "
                  f"F >= {report['frechet_lb']:.6g}")
    return EXIT_OK


def _config(args) -> SolverConfig:
    return SolverConfig(time_limit=args.time_limit, node_limit=args.node_limit, feas_tol=args.tol,
                        lp_engine=args.lp_engine, log_path=getattr(args, "log", None))


def verify_result(inst: Instance, res, tol: float = 1e-6) -> float:
    """Recompute F from the raw series and the reported paths."""
    z = res.incumbent_mean.values
    F = sum(path_cost(s.values, z, p) for s, p in zip(inst.samples, res.paths)) / inst.k
    if abs(F - res.p) > tol * max(1.0, abs(F)):
        raise ConsistencyError(f"reported F {res.p!r} but paths give {F!r}")
    return F


def cmd_solve(args) -> int:
    inst = load_input(args)
    graph, distance = _formulation(args.formulation)
    model = build_model(inst, graph=graph, distance=distance)
    res = solve(model, _config(args))
    if res.incumbent_mean is not None:
        verify_result(inst, res)
        if args.mean_out:
            Path(args.mean_out).write_text(json.dumps(res.incumbent_mean.tolist()) + "\n")
    out = res.to_json()
    out.update(formulation=f"{graph}:{distance}", constraint=inst.constraint.label(),
               instance=inst.name)
    _emit(out, f"{res.status}: F = {res.p:.6g}, d = {res.d:.6g}, gap = {res.gap:.3g}, "
               f"{res.nodes} nodes, {res.wall_time:.2f}s")
    if res.status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_export(args) -> int:
    inst = load_input(args)
    graph, distance = _formulation(args.formulation)
    text = export_lp(build_model(inst, graph=graph, distance=distance))
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_input(args)
    res = brute_force_mean(inst, guard=args.guard)
    _emit(res.to_json(), f"oracle F = {res.F:.6g} at length {res.length}")
    return EXIT_OK


# benchmark -------------------------------------------------------------------

def _bench_cell(task) -> dict:
    pool, k, m, label, formulation, seeds, time_limit, node_limit = task
    graph, distance = formulation.split(":")
    gaps, nodes, seconds = [], [], []
    for seed in seeds:
        inst = sample_instance(pool, k, m, seed, VARIANTS[label])
        res = solve(build_model(inst, graph=graph, distance=distance),
                    SolverConfig(time_limit=time_limit, node_limit=node_limit))
        gaps.append(res.gap)
        nodes.append(res.nodes)
        seconds.append(res.wall_time)
    n = len(seeds)
    return {
        "variant": f"k{k}-m{m}-{label}",
        "constraint": label,
        "graph": graph,
        "distance": distance,
        "gap": math.inf if any(math.isinf(g) for g in gaps) else sum(gaps) / n,
        "nodes": sum(nodes) / n,
        "seconds": sum(seconds) / n,
        "reps": n,
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def bench_rows(pool: Sequence[TimeSeries], k: int, m: int, labels: Sequence[str],
               formulations: Sequence[str], seeds: Sequence[int], time_limit: float,
               node_limit: Optional[int] = None, jobs: int = 1) -> list[dict]:
    tasks = [(list(pool), k, m, label, f, list(seeds), time_limit, node_limit)
             for label in labels for f in formulations]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_bench_cell, tasks))
    return [_bench_cell(t) for t in tasks]


def format_bench(rows: list[dict], layout: str = "long", omit_timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if layout == "long":
        w.writerow(BENCH_HEADER)
        for r in rows:
            w.writerow([_fmt(r[h]) if not (h == "seconds" and omit_timing) else "NA" for h in BENCH_HEADER])
        return buf.getvalue()
    # one row per variant, one gap column per formulation
    forms = list(dict.fromkeys(f"{r['graph']}:{r['distance']}" for r in rows))
    w.writerow(["variant", "constraint", "reps"] + forms)
    variants = list(dict.fromkeys((r["variant"], r["constraint"]) for r in rows))
    for variant, label in variants:
        cells = {f"{r['graph']}:{r['distance']}": r for r in rows if r["variant"] == variant}
        reps = next(iter(cells.values()))["reps"]
        w.writerow([variant, label, reps] + [_fmt(cells[f]["gap"]) if f in cells else "" for f in forms])
    return buf.getvalue()


def cmd_bench(args) -> int:
    labels = [s.strip() for s in args.constraints.split(",") if s.strip()]
    unknown = [s for s in labels if s not in VARIANTS]
    if unknown:
        raise UsageError(f"unknown constraint variant(s) {unknown}; expected {', '.join(VARIANTS)}")
    forms = FORMULATIONS if args.formulations == "all" else [
        ":".join(_formulation(f)) for f in args.formulations.split(",")]
    pool = [row.series for row in load_ucr(args.dataset)]
    seeds = [args.seed + r for r in range(args.reps)]
    rows = bench_rows(pool, args.k, args.m, labels, forms, seeds, args.time_limit,
                      args.node_limit, args.jobs)
    text = format_bench(rows, args.layout, args.omit_timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"{len(rows)} cells, {args.reps} reps each", file=sys.stderr)
    return EXIT_OK


# parser ----------------------------------------------------------------------

def _add_input(p) -> None:
    p.add_argument("--instance", help="instance JSON file")
    p.add_argument("--series", nargs="+", help="one file per series")
    p.add_argument("--dataset", help="UCR file to sample an instance from")
    p.add_argument("--k", type=int, default=2, help="series to sample (with --dataset)")
    p.add_argument("--m", type=int, default=10, help="reduced length (with --dataset)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constraint", help="none | sakoe-chiba:<r> | itakura:<sigma>")


def _add_limits(p) -> None:
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--node-limit", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dtwmean", description="Exact DTW means by branch and bound.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dtw", help="constrained dtw-distance of two series")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--constraint")
    p.add_argument("--path", action="store_true", help="include an optimal warping path")
    p.set_defaults(func=cmd_dtw)

    p = sub.add_parser("bounds", help="mean-value bounds and the Fréchet lower bound")
    _add_input(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("solve", help="exact mean by branch and bound")
    _add_input(p)
    _add_limits(p)
    p.add_argument("--formulation", default="arc:quadratic")
    p.add_argument("--tol", type=float, default=1e-9, help="feasibility and pruning tolerance")
    p.add_argument("--lp-engine", default="highs", choices=["highs", "simplex"])
    p.add_argument("--log", help="write the JSON-lines event log here")
    p.add_argument("--mean-out", help="write the mean series (JSON) here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export", help="write a formulation in LP format")
    _add_input(p)
    p.add_argument("--formulation", default="arc:quadratic")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("oracle", help="exact mean by path-tuple enumeration (tiny inputs)")
    _add_input(p)
    p.add_argument("--guard", type=int, default=10 ** 7, help="maximum number of path tuples")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="gap table over sampled instances")
    p.add_argument("--dataset", required=True, help="UCR file")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="first seed; reps use seed, seed+1, ...")
    p.add_argument("--constraints", default="free,wide,narrow")
    p.add_argument("--formulations", default="all")
    _add_limits(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--layout", choices=["long", "table"], default="long")
    p.add_argument("--omit-timing", action="store_true", help="write NA for seconds")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dtwmean: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, InfeasibleModelError) as exc:
        print(f"dtwmean: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConsistencyError as exc:
        print(f"dtwmean: internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (OSError, ParseError, ReductionError, OracleRefusal, WarpingError, ModelError, ValueError) as exc:
        print(f"dtwmean: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
