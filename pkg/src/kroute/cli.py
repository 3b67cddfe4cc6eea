"""Command-line front end.

Every command prints one JSON report (UTF-8, two-space indent, fixed key order).
Exit status: 0 success, 1 infeasible, 2 usage or input error, 3 internal assertion.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time
from fractions import Fraction

from . import __version__
from .algorithms import ALGORITHMS, AlgorithmContractError, CutSolution, solve
from .flow import FlowContractError, InfeasibleError
from .graph import (CutInstance, ParseError, ValidationError, generate_instance, parse_instance,
                    write_instance)
from .lp import (RELAXATIONS, LPContractError, LPSolverError, build_relaxation, default_relaxation,
                 solve_relaxation, write_lp_model)
from .oracle import (OracleContractError, OracleSizeError, brute_force_cut, check_feasible)
from .reductions import ReductionContractError, parse_source, reduce_source
from .regiongrow import RegionContractError, RadiusSearchError, find_radius, make_source, \
    region_growing_integral_check

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2, 3

_USAGE_ERRORS = (ParseError, ValidationError, AlgorithmContractError, LPContractError, OracleContractError,
                 OracleSizeError, ReductionContractError, RegionContractError, FlowContractError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(x):
    """JSON-friendly number: exact integers stay integers, infinity becomes a string."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        if x.is_integer() and abs(x) < 2 ** 53:
            return int(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_clean(v) for v in obj)
    if isinstance(obj, (Fraction, float)):
        return _num(obj)
    return obj


def _digest(inst: CutInstance) -> dict:
    return {"n": inst.graph.node_count, "m": inst.graph.m, "r": inst.r, "k": inst.k, "variant": inst.variant}


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str) -> CutInstance:
    return parse_instance(_read(path))


def _solution_report(sol: CutSolution, with_trace: bool) -> dict:
    out = {
        "algorithm": sol.algorithm,
        "params": sol.params,
        "lp_value": sol.lp_value,
        "element": sol.element,
        "removed": sorted(sol.removed),
        "cost": sol.cost,
        "threshold": sol.threshold,
        "connectivities": sol.per_commodity_connectivity,
        "violation": sol.violation,
        "feasible": sol.feasible,
    }
    if sol.certificates:
        out["certificates"] = sol.certificates
    if sol.flags:
        out["flags"] = sol.flags
    if with_trace:
        out["trace"] = sol.trace
    return out


# -- subcommands -----------------------------------------------------------------------------


def _cmd_solve(args) -> tuple[int, dict]:
    inst = _load(args.inp)
    frac = None
    if args.alg in ("2mc", "kmc", "ed2nmc", "ndknmc"):
        frac = solve_relaxation(inst, default_relaxation(inst), method=args.lp_method)
    sol = solve(inst, args.alg, gamma=args.gamma, eps=args.epsilon, frac=frac, fast=args.fast)
    report = {"instance": _digest(inst)}
    report.update(_solution_report(sol, args.trace))
    if args.figure:
        if frac is None or not sol.trace:
            raise UsageError("--figure needs a region-growing algorithm that carved at least once")
        first = sol.trace[0]
        source = make_source(inst, frac)
        from .plotting import plot_volumes
        plot_volumes(args.figure, source, first["commodity"], first["center"], source.all_nodes(),
                     first["rho"], title=f"{args.alg}: first carve, commodity {first['commodity']}")
        report["figure"] = args.figure
    return EXIT_OK, report


def _cmd_lp(args) -> tuple[int, dict]:
    inst = _load(args.inp)
    which = args.relaxation or default_relaxation(inst)
    if args.dump_model:
        with open(args.dump_model, "w", encoding="utf-8") as fh:
            fh.write(write_lp_model(build_relaxation(inst, which)))
    frac = solve_relaxation(inst, which, method=args.lp_method)
    return EXIT_OK, {"instance": _digest(inst), "relaxation": which, "solver": frac.solver,
                     "objective": frac.objective, "beta": frac.beta, "x": frac.x, "y": frac.y}


def _read_solution(path: str) -> list[int]:
    text = _read(path).strip()
    if text.startswith("{"):
        data = json.loads(text)
        if "removed" not in data:
            raise UsageError("solution document has no 'removed' field")
        return [int(v) for v in data["removed"]]
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"bad solution file: {exc}") from exc


def _cmd_verify(args) -> tuple[int, dict]:
    inst = _load(args.inp)
    removed = _read_solution(args.solution)
    threshold = inst.k - 1 if args.threshold is None else args.threshold
    rep = check_feasible(inst, removed, threshold)
    costs = inst.graph.node_cost_floats() if inst.deletes_nodes else inst.graph.cost_floats()
    report = {"instance": _digest(inst), "removed": sorted(set(removed)), "threshold": threshold,
              "cost": sum(costs[x] for x in set(removed)), "connectivities": rep.connectivities,
              "violation": rep.violation, "forbidden": rep.forbidden, "feasible": rep.feasible}
    return (EXIT_OK if rep.feasible else EXIT_INFEASIBLE), report


def _cmd_brute(args) -> tuple[int, dict]:
    inst = _load(args.inp)
    threshold = inst.k - 1 if args.threshold is None else args.threshold
    sol = brute_force_cut(inst, threshold, method=args.method, max_elements=args.max_elements,
                          jobs=args.jobs)
    report = {"instance": _digest(inst)}
    report.update(_solution_report(sol, False))
    return EXIT_OK, report


def _cmd_reduce(args) -> tuple[int, dict]:
    src = parse_source(_read(args.inp))
    expected = {"ssve": "SsveInstance", "minrep": "MinRepInstance", "vc3": "VcInstance"}[args.source]
    if type(src).__name__ != expected:
        raise UsageError(f"--from {args.source} does not match the source document")
    art = reduce_source(src, args.k)
    text = write_instance(art.instance)
    if args.out_instance:
        with open(args.out_instance, "w", encoding="utf-8") as fh:
            fh.write(text)
    report = {"kind": art.kind, "params": art.params, "instance": _digest(art.instance)}
    if not args.out_instance:
        report["document"] = text
    else:
        report["written"] = args.out_instance
    return EXIT_OK, report


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not key=value")
        key, value = item.split("=", 1)
        if "," in value:
            parts = value.split(",")
            params[key] = tuple(int(p) for p in parts)
            continue
        for conv in (int, float):
            try:
                params[key] = conv(value)
                break
            except ValueError:
                continue
        else:
            params[key] = value
    return params


def _cmd_gen(args) -> tuple[int, dict]:
    params = _parse_params(args.param)
    inst = generate_instance(args.model, params, args.seed)
    text = write_instance(inst)
    if args.out_instance:
        with open(args.out_instance, "w", encoding="utf-8") as fh:
            fh.write(text)
        return EXIT_OK, {"model": args.model, "seed": args.seed, "params": params, "instance": _digest(inst),
                         "written": args.out_instance}
    return EXIT_OK, {"model": args.model, "seed": args.seed, "params": params, "instance": _digest(inst),
                     "document": text}


def _random_region(rng: random.Random, source, center: int, keep: float) -> frozenset:
    nodes = sorted(source.all_nodes())
    return frozenset([center] + [v for v in nodes if v != center and rng.random() < keep])


def _cmd_check_region(args) -> tuple[int, dict]:
    inst = _load(args.inp)
    which = args.relaxation or default_relaxation(inst)
    frac = solve_relaxation(inst, which, method=args.lp_method)
    source = make_source(inst, frac)
    if source.beta <= 0:
        raise UsageError("LP optimum is zero; region growing has nothing to charge")
    rng = random.Random(args.seed)
    rows = []
    for _ in range(args.samples):
        i = rng.randrange(inst.r)
        s, t = frac.pairs[i]
        center = s if rng.random() < 0.5 else rng.choice(sorted(source.all_nodes()))
        keep = 1.0 if rng.random() < 0.5 else rng.uniform(0.4, 1.0)
        S = _random_region(rng, source, center, keep)
        a = rng.choice([0.0, rng.uniform(0.0, 0.5)])
        b = rng.choice([1.0, rng.uniform(a + 0.1, a + 1.0)])
        res = region_growing_integral_check(source, i, center, S, (a, b))
        rows.append({"commodity": i, "center": center, "region_size": len(S), "interval": [a, b], **res})
    passed = sum(1 for r in rows if r["pass"])
    report = {"instance": _digest(inst), "relaxation": which, "seed": args.seed, "samples": args.samples,
              "passed": passed, "checks": rows}
    if args.figure:
        s, _ = frac.pairs[0]
        S = source.all_nodes()
        alpha = 0.5
        try:
            rho, _, _ = find_radius(source, 0, s, S, alpha)
        except RadiusSearchError:
            rho = None
        from .plotting import plot_volumes
        plot_volumes(args.figure, source, 0, s, S, rho, title="commodity 0 from its source")
        report["figure"] = args.figure
    return (EXIT_OK if passed == len(rows) else EXIT_ASSERT), report


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kroute", description="k-route cut algorithms, relaxations, oracles and reductions")
    p.add_argument("--version", action="version", version=f"kroute {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, need_in=True):
        if need_in:
            sp.add_argument("--in", dest="inp", required=True, help="instance file ('-' for stdin)")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: KROUTE_JOBS or 1)")

    sp = sub.add_parser("solve", help="run an approximation algorithm")
    common(sp)
    sp.add_argument("--alg", required=True, choices=sorted(ALGORITHMS))
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--fast", action="store_true", help="kmwc-unit: drop every cheap terminal per round")
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--lp-method", default="auto", choices=["auto", "highs", "exact"])
    sp.add_argument("--figure", help="PNG of the ball volumes for the first carve")

    sp = sub.add_parser("lp", help="solve an LP relaxation")
    common(sp)
    sp.add_argument("--relaxation", choices=sorted(RELAXATIONS))
    sp.add_argument("--dump-model", help="write the model in LP text format")
    sp.add_argument("--lp-method", default="auto", choices=["auto", "highs", "exact"])

    sp = sub.add_parser("verify", help="check a deletion set against a threshold")
    common(sp)
    sp.add_argument("--solution", required=True, help="report JSON with 'removed', or whitespace ids")
    sp.add_argument("--threshold", type=int, default=None, help="default k-1")

    sp = sub.add_parser("brute", help="exact minimum-cost cut by exhaustive search")
    common(sp)
    sp.add_argument("--threshold", type=int, default=None, help="default k-1")
    sp.add_argument("--method", default="enumerate", choices=["enumerate", "branch"])
    sp.add_argument("--max-elements", type=int, default=22)

    sp = sub.add_parser("reduce", help="build a cut instance from a source problem")
    common(sp)
    sp.add_argument("--from", dest="source", required=True, choices=["ssve", "minrep", "vc3"])
    sp.add_argument("--k", type=int, default=None, help="route parameter for vc3 (default 3)")
    sp.add_argument("--out-instance", help="write the instance document here")

    sp = sub.add_parser("gen", help="generate a random instance")
    common(sp, need_in=False)
    sp.add_argument("--model", required=True, choices=["gnp", "grid", "planted"])
    sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="generator parameter; ranges as lo,hi (repeatable)")
    sp.add_argument("--out-instance", help="write the instance document here")

    sp = sub.add_parser("check-region", help="region-growing integral checks on random configurations")
    common(sp)
    sp.add_argument("--relaxation", choices=sorted(RELAXATIONS))
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--lp-method", default="auto", choices=["auto", "highs", "exact"])
    sp.add_argument("--figure", help="PNG of the ball volumes around the first source")
    return p


_COMMANDS = {"solve": _cmd_solve, "lp": _cmd_lp, "verify": _cmd_verify, "brute": _cmd_brute,
             "reduce": _cmd_reduce, "gen": _cmd_gen, "check-region": _cmd_check_region}


def execute(argv) -> tuple[int, dict]:
    """Run one command; returns (exit status, report).  Never raises for expected failures."""
    status, report, _ = _run(argv)
    return status, report


def _run(argv):
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return EXIT_USAGE, {"command": argv, "error": f"usage: {exc}"}, None
    if args.command is None:
        return EXIT_USAGE, {"command": argv, "error": "usage: missing subcommand"}, None
    status, report = _dispatch(args, argv)
    return status, report, (args.out if "error" not in report else None)


def _dispatch(args, argv) -> tuple[int, dict]:
    if args.jobs is None:
        args.jobs = int(os.environ.get("KROUTE_JOBS", "1") or 1)
    start = time.perf_counter()
    try:
        status, body = _COMMANDS[args.command](args)
    except UsageError as exc:
        return EXIT_USAGE, {"command": argv, "error": str(exc)}
    except InfeasibleError as exc:
        return EXIT_INFEASIBLE, {"command": argv, "error": f"infeasible: {exc}"}
    except AssertionError as exc:
        return EXIT_ASSERT, {"command": argv, "error": f"assertion: {exc}"}
    except (LPSolverError, RadiusSearchError) as exc:
        return EXIT_ASSERT, {"command": argv, "error": f"{type(exc).__name__}: {exc}"}
    except _USAGE_ERRORS as exc:
        return EXIT_USAGE, {"command": argv, "error": f"{type(exc).__name__}: {exc}"}
    report = {"command": argv, "seed": args.seed}
    report.update(body)
    report["wall_time"] = round(time.perf_counter() - start, 6)
    return status, report


def render(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, ensure_ascii=False) + "\n"


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    status, report, out = _run(argv)
    text = render(report)
    if "error" in report:
        sys.stderr.write(report["error"].splitlines()[0] + "\n")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
