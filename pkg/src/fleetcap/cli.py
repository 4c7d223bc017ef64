"""Command-line interface.

Exit codes: 0 ok, 1 validation failure / oracle disagreement, 2 input error,
3 infeasible, 4 numeric failure, 5 node or time limit reached.

Outputs without ``-o`` go to ``$FLEETCAP_OUTDIR`` (default: current directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import AnalysisError, cap_grid, sweep_emission_cap
from .bnb import ILP_INFEASIBLE, ILP_OPTIMAL, NODE_LIMIT, TIME_LIMIT, SolveParams
from .generate import GenerationError, GenSpec, generate, texas_preset
from .ilp import build_ilp, export_lp_text
from .io import SchemaError, dumps, load_instance, load_solution, save_instance, save_solution
from .model import (
    ConfigurationError,
    DimensionError,
    Dimensions,
    ModelOptions,
    Variant,
    check_feasible,
)
from .oracle import DEFAULT_LIMIT, SearchSpaceTooLarge, brute_force_solve
from .solve import solve_instance

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4
EXIT_LIMIT = 5

OUTDIR_ENV = "FLEETCAP_OUTDIR"

log = logging.getLogger("fleetcap")

EPILOG = f"""\
exit codes:
  {EXIT_OK}  success
  {EXIT_VALIDATION}  validation failure (violations found, or oracle disagrees)
  {EXIT_INPUT}  input error (unreadable or malformed file, bad flags, oracle refusal)
  {EXIT_INFEASIBLE}  model infeasible
  {EXIT_NUMERIC}  solver numeric failure
  {EXIT_LIMIT}  node or time limit reached before optimality

environment:
  {OUTDIR_ENV}  directory for output files when -o is not given (default: .)
"""


class InputError(Exception):
    pass


def _out_path(arg, default_name):
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUTDIR_ENV, ".")) / default_name


def _read_instance(path, cap=None):
    try:
        inst = load_instance(path)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, SchemaError, ValueError, TypeError) as exc:
        raise InputError(f"malformed instance {path}: {exc}") from exc
    if cap is not None:
        inst = inst.with_cap(cap)
    return inst


def _parse_caps(text):
    caps = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        caps.append(math.inf if tok in ("inf", "+inf", "infinity") else float(tok))
    if not caps:
        raise InputError("--caps is empty")
    return caps


def _options(args):
    return ModelOptions(per_mode_demand=args.per_mode_demand, bound_service=args.bound_service)


def _params(args):
    return SolveParams(node_limit=args.node_limit, time_limit=args.time_limit, verbose=args.verbose > 1)


def _emit(data):
    print(json.dumps(data, indent=1))


# -- subcommands ----------------------------------------------------------


def cmd_generate(args):
    try:
        if args.preset == "texas":
            inst = texas_preset(args.seed, periods=args.periods, rental_emission_ratio=args.rho)
        elif args.spec:
            data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
            if args.seed is not None:
                data["seed"] = args.seed
            inst = generate(GenSpec.from_dict(data))
        elif args.dims:
            inst = generate(GenSpec(Dimensions(*args.dims), seed=args.seed or 0,
                                    rental_emission_ratio=args.rho))
        else:
            raise InputError("one of --preset, --spec or --dims is required")
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, GenerationError) as exc:
        raise InputError(f"bad generation spec: {exc}") from exc
    out = _out_path(args.output, "instance.json")
    save_instance(inst, out)
    d = inst.dims
    print(f"wrote {out}: I={d.I} J={d.J} M={d.M} T={d.T} seed={args.seed}")
    return EXIT_OK


def cmd_solve(args):
    inst = _read_instance(args.instance, args.cap)
    try:
        rep = solve_instance(inst, args.variant, _params(args), _options(args))
    except ConfigurationError as exc:
        raise InputError(str(exc)) from exc
    if rep.solution is not None:
        save_solution(rep.solution, _out_path(args.output, "solution.json"))
    report = rep.as_dict()
    if args.report:
        Path(args.report).write_text(dumps(report), encoding="utf-8")
    _emit(report)
    if rep.status == ILP_OPTIMAL:
        return EXIT_OK
    if rep.status == ILP_INFEASIBLE:
        return EXIT_INFEASIBLE
    if rep.status in (NODE_LIMIT, TIME_LIMIT):
        return EXIT_LIMIT
    return EXIT_NUMERIC


def cmd_sweep(args):
    inst = _read_instance(args.instance)
    params = _params(args)
    try:
        if args.caps:
            caps = _parse_caps(args.caps)
        else:
            caps = cap_grid(inst, args.n, params, _options(args))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    result = sweep_emission_cap(inst, caps, params, _options(args), workers=args.workers)
    out = _out_path(args.output, "sweep.csv")
    out.write_text(result.to_csv(), encoding="utf-8")
    print(f"wrote {out}: {len(result.rows)} rows, mean cost increase "
          f"{result.mean_cost_increase_pct:.3f}%")
    return EXIT_OK


def cmd_validate(args):
    inst = _read_instance(args.instance, args.cap)
    try:
        sol = load_solution(args.solution)
        violations = check_feasible(inst, sol, args.variant, _options(args))
    except (OSError, json.JSONDecodeError, SchemaError, DimensionError, ConfigurationError,
            ValueError, TypeError) as exc:
        raise InputError(f"cannot validate: {exc}") from exc
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s)")
        return EXIT_VALIDATION
    print("feasible")
    return EXIT_OK


def cmd_oracle_check(args):
    inst = _read_instance(args.instance, args.cap)
    try:
        oracle = brute_force_solve(inst, args.variant, limit=args.limit, options=_options(args))
    except SearchSpaceTooLarge as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigurationError as exc:
        raise InputError(str(exc)) from exc
    rep = solve_instance(inst, args.variant, _params(args), _options(args))
    oracle_obj = None if oracle is None else oracle[1]
    solver_obj = rep.objective if rep.feasible else None
    if oracle_obj is None or solver_obj is None:
        agree = oracle_obj is None and solver_obj is None
    else:
        agree = abs(oracle_obj - solver_obj) <= 1e-6 * max(1.0, abs(oracle_obj))
    _emit({"variant": Variant(args.variant).value, "oracle_objective": oracle_obj,
           "solver_objective": solver_obj, "solver_status": rep.status, "agree": agree})
    return EXIT_OK if agree else EXIT_VALIDATION


def cmd_export_lp(args):
    inst = _read_instance(args.instance, args.cap)
    try:
        problem, vmap = build_ilp(inst, args.variant, _options(args))
    except ConfigurationError as exc:
        raise InputError(str(exc)) from exc
    out = _out_path(args.output, "model.lp")
    out.write_text(export_lp_text(problem, vmap), encoding="utf-8")
    print(f"wrote {out}: {problem.n_cols} columns, {problem.n_rows} rows")
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def _model_flags(p, solver=True):
    p.add_argument("--variant", choices=[v.value for v in Variant], default="base")
    p.add_argument("--cap", type=float, help="emission cap (kg CO2); overrides the instance file")
    p.add_argument("--per-mode-demand", action="store_true",
                   help="cover demand per (destination, mode, period) instead of per (destination, period)")
    p.add_argument("--bound-service", action="store_true", help="add q <= V and qr <= Vr")
    if solver:
        p.add_argument("--node-limit", type=int, help="stop after this many branch-and-bound nodes")
        p.add_argument("--time-limit", type=float, help="stop after this many seconds")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="fleetcap",
        description="Fleet assignment with emission caps.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v progress, -vv node log")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("--preset", choices=["texas"])
    p.add_argument("--spec", help="GenSpec JSON file")
    p.add_argument("--dims", type=int, nargs=4, metavar=("I", "J", "M", "T"))
    p.add_argument("--seed", type=int, help="RNG seed (overrides the spec file's seed)")
    p.add_argument("--periods", type=int, default=2, help="periods for --preset texas")
    p.add_argument("--rho", type=float, default=0.7, help="rental/organizational emission ratio")
    p.add_argument("-o", "--output", help="instance path (default instance.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    _model_flags(p)
    p.add_argument("-o", "--output", help="solution JSON path")
    p.add_argument("--report", help="also write the report JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="emission-cap sensitivity sweep to CSV")
    p.add_argument("instance")
    p.add_argument("-n", type=int, default=15, help="grid size when --caps is not given")
    p.add_argument("--caps", help="comma-separated caps; 'inf' means uncapped")
    p.add_argument("--workers", type=int, default=1, help="solve caps in this many processes")
    p.add_argument("--per-mode-demand", action="store_true", help="as for solve")
    p.add_argument("--bound-service", action="store_true", help="as for solve")
    p.add_argument("--node-limit", type=int, help="per-cap node limit")
    p.add_argument("--time-limit", type=float, help="per-cap time limit in seconds")
    p.add_argument("-o", "--output", help="CSV path (default sweep.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="list constraint violations of a solution")
    p.add_argument("instance")
    p.add_argument("solution")
    _model_flags(p, solver=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle-check", help="compare the solver with brute-force enumeration")
    p.add_argument("instance")
    _model_flags(p)
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="refuse above this many assignments")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("export-lp", help="write CPLEX LP-format model text")
    p.add_argument("instance")
    _model_flags(p, solver=False)
    p.add_argument("-o", "--output", help="LP path (default model.lp)")
    p.set_defaults(func=cmd_export_lp)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else
                        logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
