"""Command-line interface.

Exit codes: 0 success, 1 infeasible or empty result, 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import io as iox
from .frontier import AUGMECON2, AUGMECON2VIKOR, FrontierConfig, run_frontier
from .generate import GeneratorError, GeneratorSpec, generate_instance
from .milp import to_lp_text
from .model import HYBRID_LIMITS, PER_ABILITY, build_milp, decode_assignment, evaluate
from .oracle import EnumerationTooLargeError, brute_force_pareto, compare_fronts
from .sensitivity import green_table, sensitivity_capacity, sensitivity_green
from .solver import solve_milp

log = logging.getLogger("pareto_assign")

EXIT_OK, EXIT_EMPTY, EXIT_USAGE = 0, 1, 2


def _weights(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("weights need three comma-separated numbers")
    total = sum(parts)
    if total <= 0 or any(p < 0 for p in parts):
        raise argparse.ArgumentTypeError("weights must be non-negative with a positive sum")
    return tuple(p / total for p in parts)  # type: ignore[return-value]


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-green", action="store_true", help="drop the green penalty/reward block")
    p.add_argument("--hybrid-limit", choices=HYBRID_LIMITS, default=PER_ABILITY)


def _add_frontier_flags(p: argparse.ArgumentParser, grid_default: int = 5) -> None:
    _add_model_flags(p)
    p.add_argument("--grid", type=int, default=grid_default, help="number of grid intervals N")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--weights", type=_weights, default=None, help="w1,w2,w3 (normalized to sum 1)")
    p.add_argument("--no-bypass", action="store_true")
    p.add_argument("--s-sense", choices=("min", "max"), default="min",
                   help="direction of the regret sum S in the VIKOR sweep")


def _config(args, method: str) -> FrontierConfig:
    return FrontierConfig(method=method, grid_count=args.grid, eps=args.eps, weights=args.weights,
                          bypass=not args.no_bypass, hybrid_limit=args.hybrid_limit,
                          green_enabled=not args.no_green, vikor_s_sense=args.s_sense)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pareto-assign", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("file")

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    for f in fields(GeneratorSpec):
        if f.name == "seed" or f.type not in ("int", "float"):
            continue
        p.add_argument("--" + f.name.replace("_", "-"), type=int if f.type == "int" else float, default=None)

    p = sub.add_parser("solve", help="optimize a single objective")
    p.add_argument("file")
    p.add_argument("--objective", choices=("z1", "z2", "z3"), default="z1")
    p.add_argument("--dump-lp", metavar="PATH", help="also write the MILP in LP text form")
    _add_model_flags(p)

    p = sub.add_parser("frontier", help="generate a Pareto front")
    p.add_argument("file")
    p.add_argument("--method", choices=(AUGMECON2, AUGMECON2VIKOR), default=AUGMECON2VIKOR)
    p.add_argument("--out", help="directory for front.csv, front.json and front.plot.txt")
    _add_frontier_flags(p)

    p = sub.add_parser("oracle", help="brute-force Pareto front (small instances)")
    p.add_argument("file")
    _add_model_flags(p)

    p = sub.add_parser("compare", help="run both methods and compare their fronts")
    p.add_argument("file")
    _add_frontier_flags(p)

    p = sub.add_parser("sensitivity", help="capacity or green sensitivity run")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--capacity-scale", type=float)
    group.add_argument("--green", action="store_true")
    p.add_argument("--method", choices=(AUGMECON2, AUGMECON2VIKOR), default=AUGMECON2VIKOR)
    _add_frontier_flags(p)

    p = sub.add_parser("dump-lp", help="print the MILP in LP text form")
    p.add_argument("file")
    p.add_argument("--objective", choices=("z1", "z2", "z3"), default="z1")
    _add_model_flags(p)
    return parser


def _print_front(result, inst) -> None:
    sys.stdout.write(iox.front_csv(result, inst))


def _cmd_validate(args) -> int:
    iox.parse_instance(args.file)
    print(f"{args.file}: ok")
    return EXIT_OK


def _cmd_generate(args) -> int:
    overrides = {f.name: getattr(args, f.name) for f in fields(GeneratorSpec)
                 if f.name != "seed" and getattr(args, f.name, None) is not None}
    inst = generate_instance(GeneratorSpec(seed=args.seed, **overrides))
    iox.write_instance(inst, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = iox.parse_instance(args.file)
    problem = build_milp(inst, not args.no_green, hybrid_limit=args.hybrid_limit).with_objective(args.objective)
    if args.dump_lp:
        iox.atomic_write(args.dump_lp, to_lp_text(problem))
    sol = solve_milp(problem)
    if not sol.optimal:
        print("infeasible")
        return EXIT_EMPTY
    a = decode_assignment(inst, problem, sol.x)
    v = evaluate(inst, a, not args.no_green)
    print(f"{args.objective} = {sol.objective:.6f}  (nodes {sol.nodes})")
    print(f"z1={v.z1:.3f} z2={v.z2:.3f} z3={v.z3:.3f}")
    for lab in a.labels(inst):
        print("  " + " ".join(lab))
    return EXIT_OK


def _cmd_frontier(args) -> int:
    inst = iox.parse_instance(args.file)
    result = run_frontier(inst, _config(args, args.method))
    if args.out:
        out = Path(args.out)
        iox.export_front(result, inst, out / "front.csv", "csv")
        iox.export_front(result, inst, out / "front.json", "json")
    _print_front(result, inst)
    if not result.points:
        log.warning("no feasible assignment: empty front")
        return EXIT_EMPTY
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = iox.parse_instance(args.file)
    front = brute_force_pareto(inst, not args.no_green, hybrid_limit=args.hybrid_limit)
    print(f"feasible assignments: {front.n_feasible}, pareto points: {len(front.pareto)}")
    print("z1_cost,z2_quality,z3_emission")
    for v in front.pareto:
        print(f"{v.z1:.3f},{v.z2:.3f},{v.z3:.3f}")
    return EXIT_OK if front.pareto else EXIT_EMPTY


def _cmd_compare(args) -> int:
    inst = iox.parse_instance(args.file)
    plain = run_frontier(inst, _config(args, AUGMECON2))
    vikor = run_frontier(inst, _config(args, AUGMECON2VIKOR))
    for label, res in ((AUGMECON2, plain), (AUGMECON2VIKOR, vikor)):
        print(f"# {label}")
        _print_front(res, inst)
    report = compare_fronts(plain, vikor)
    print("# comparison")
    for line in report.lines(AUGMECON2, AUGMECON2VIKOR):
        print(line)
    try:
        front = brute_force_pareto(inst, not args.no_green, hybrid_limit=args.hybrid_limit)
    except EnumerationTooLargeError:
        print("# oracle: instance too large to enumerate")
    else:
        for label, res in ((AUGMECON2, plain), (AUGMECON2VIKOR, vikor)):
            inside = sum(1 for p in res.points if front.contains(p.objectives))
            print(f"# oracle: {label} {inside}/{len(res.points)} points on the exact front "
                  f"({len(front.pareto)} exact points)")
    return EXIT_OK if plain.points or vikor.points else EXIT_EMPTY


def _cmd_sensitivity(args) -> int:
    inst = iox.parse_instance(args.file)
    cfg = _config(args, args.method)
    if args.green:
        report = sensitivity_green(inst, cfg)
        print("grid_index,cost_off,quality_off,cost_on,quality_on,emission_on")
        for row in green_table(inst, report):
            print(f"{row['grid_index']},{row['cost_off']:.3f},{row['quality_off']:.3f},"
                  f"{row['cost_on']:.3f},{row['quality_on']:.3f},{row['emission_on']:.3f}")
    else:
        if not args.capacity_scale > 0:
            print("capacity scale must be positive", file=sys.stderr)
            return EXIT_USAGE
        report = sensitivity_capacity(inst, args.capacity_scale, cfg)
        print("grid_index,dz1,dz2,dz3")
        for g, d1, d2, d3 in report.deltas():
            print(f"{g},{d1:.3f},{d2:.3f},{d3:.3f}")
        r1, r2, r3 = report.average_relative()
        print(f"# average relative change: z1 {r1:+.2%}, z2 {r2:+.2%}, z3 {r3:+.2%}")
    d1, d2, d3 = report.average_deltas()
    print(f"# average delta: z1 {d1:+.3f}, z2 {d2:+.3f}, z3 {d3:+.3f} over {len(report.matched)} matched points")
    return EXIT_OK if report.matched else EXIT_EMPTY


def _cmd_dump_lp(args) -> int:
    inst = iox.parse_instance(args.file)
    problem = build_milp(inst, not args.no_green, hybrid_limit=args.hybrid_limit).with_objective(args.objective)
    sys.stdout.write(to_lp_text(problem))
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate,
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "frontier": _cmd_frontier,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
    "sensitivity": _cmd_sensitivity,
    "dump-lp": _cmd_dump_lp,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except iox.InstanceFormatError as exc:
        print(f"error: {args.file}:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_USAGE
    except (GeneratorError, ValueError, EnumerationTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
