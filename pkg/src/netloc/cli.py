"""Command-line interface: ``netloc generate|solve|evaluate|sweep``.

Exit codes::

    0  success
    1  unexpected localization error
    2  invalid arguments
    3  unreadable or malformed input file
    4  no bracket found for the root
    5  root search did not converge, or the result is infeasible
    6  random network generation failed
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import harness, io
from .errors import GenerationError, LocalizationError, NoBracketError, ParameterError, ParseError
from .minimax import BoxRegion, SolverConfig, write_solver_trace
from .network import network_density
from .rootfind import localize, write_root_trace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_NO_BRACKET = 4
EXIT_NOT_CONVERGED = 5
EXIT_GENERATION = 6

log = logging.getLogger("netloc")

_SOLVER_FLAGS = {
    "sigma1": float,
    "sigma2": float,
    "gamma": float,
    "gamma1": float,
    "epsilon": float,
    "mu0": float,
    "max_outer_iterations": int,
    "max_line_search_iterations": int,
    "multistart_count": int,
    "screen_keep": int,
    "screen_mu": float,
}


class UsageError(Exception):
    pass


def _add_solver_flags(p: argparse.ArgumentParser, base: SolverConfig) -> None:
    g = p.add_argument_group("solver")
    for name, kind in _SOLVER_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=getattr(base, name))
    g.add_argument("--seed", dest="rng_seed", type=int, default=base.rng_seed)


def _solver_config(args) -> SolverConfig:
    names = {f.name for f in fields(SolverConfig)}
    return SolverConfig(**{k: v for k, v in vars(args).items() if k in names})


def _box(args) -> BoxRegion:
    if args.box_half_width is not None:
        return BoxRegion.symmetric(args.box_half_width)
    return BoxRegion.symmetric(args.field_size * math.sqrt(2.0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netloc", description="Anchor-free network localization from distance bounds.")
    parser.add_argument("--config", type=Path, help="key = value file supplying defaults for absent flags")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="random noisy network in a square field")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--density", type=float, required=True)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--field-lower", type=float, default=0.0)
    gen.add_argument("--field-upper", type=float, default=10.0)
    gen.add_argument("--instance", type=Path, default=Path("network.txt"))
    gen.add_argument("--truth", type=Path, default=Path("truth.txt"))

    solve = sub.add_parser("solve", help="localize the nodes of an instance file")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--out", type=Path, default=Path("positions.txt"))
    solve.add_argument("--root-tol", type=float, default=1e-2)
    solve.add_argument("--c-tol", type=float, default=None)
    solve.add_argument("--c-init", type=float, default=None)
    solve.add_argument("--field-size", type=float, default=10.0,
                       help="side of the square field; the search box is +-size*sqrt(2)")
    solve.add_argument("--box-half-width", type=float, default=None)
    solve.add_argument("--trace", action="store_true", help="write <out>.solver.csv and <out>.root.csv")
    _add_solver_flags(solve, SolverConfig())

    ev = sub.add_parser("evaluate", help="mean/max error of an estimate against ground truth")
    ev.add_argument("truth", type=Path)
    ev.add_argument("estimate", type=Path)
    ev.add_argument("--instance", type=Path, help="instance file, used only to report the density")
    ev.add_argument("--no-align", action="store_true", help="compare raw coordinates")
    ev.add_argument("--scatter", type=Path, help="per-node CSV output")
    ev.add_argument("--svg", type=Path, help="scatter plot output")

    sw = sub.add_parser("sweep", help="average errors over random networks per density")
    sw.add_argument("--densities", required=True, help="comma-separated, ascending")
    sw.add_argument("--trials", type=int, required=True)
    sw.add_argument("--n", type=int, required=True)
    sw.add_argument("--noise", type=float, default=0.1)
    sw.add_argument("--root-tol", type=float, default=1e-2)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", type=Path, default=None, help="CSV path (stdout if omitted)")
    _add_solver_flags(sw, harness.SWEEP_SOLVER)
    return parser


def read_config(path: Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("config lines must be 'key = value'", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {value!r}")


def parse_args(argv) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` fill in only the flags that were not given."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    overrides = read_config(args.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices[args.command]
    known = {}
    for action in sub._actions:
        known[action.dest] = action
        for opt in action.option_strings:
            known[opt.lstrip("-").replace("-", "_")] = action
    typed = {}
    for key, value in overrides.items():
        action = known.get(key)
        if action is None or not action.option_strings:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                typed[action.dest] = _parse_bool(value)
            else:
                typed[action.dest] = action.type(value) if action.type else value
        except ValueError:
            raise UsageError(f"bad value for config key {key!r}: {value!r}") from None
    sub.set_defaults(**typed)
    return parser.parse_args(argv)


def cmd_generate(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    spec = harness.GenerationSpec(args.n, args.density, args.noise, args.field_lower, args.field_upper, args.seed)
    data = harness.generate_network(spec)
    io.write_instance(data.instance, args.instance)
    io.write_positions(data.truth, args.truth)
    print(f"density {network_density(data.instance):.6f} edges {data.instance.n_edges}")
    return EXIT_OK


def cmd_solve(args) -> int:
    net = io.read_instance(args.instance)
    cfg = _solver_config(args)
    box = _box(args)
    result = localize(net, box, cfg, root_tol=args.root_tol, c_tol=args.c_tol, c_init=args.c_init, trace=args.trace)
    io.write_positions(result.x_star, args.out)
    if args.trace:
        final = min(result.evaluations, key=lambda e: abs(e.c0 - result.c0_star))
        write_solver_trace(final.witness.trace, args.out.with_suffix(".solver.csv"))
        write_root_trace(result.trace, args.out.with_suffix(".root.csv"))
    feasible = result.feasibility.feasible
    print(f"{result.c0_star:.12g} {result.residual:.12g} {result.total_solver_iterations} {str(feasible).lower()}")
    return EXIT_OK if result.converged and feasible else EXIT_NOT_CONVERGED


def cmd_evaluate(args) -> int:
    truth = io.read_positions(args.truth)
    estimate = io.read_positions(args.estimate)
    if truth.shape != estimate.shape:
        raise UsageError(f"truth has {truth.size // 2} nodes, estimate has {estimate.size // 2}")
    density = network_density(io.read_instance(args.instance)) if args.instance else float("nan")
    report = harness.error_metrics(truth, estimate, density=density, aligned=not args.no_align)
    print(f"mean_error {report.mean_error:.10g}")
    print(f"max_error {report.max_error:.10g}")
    if not math.isnan(density):
        print(f"density {density:.10g}")
    for k, off in enumerate(report.per_node_offsets, start=1):
        print(f"node {k} offset {off:.10g}")
    if args.scatter:
        harness.write_scatter_csv(truth, report, args.scatter)
    if args.svg:
        args.svg.write_text(harness.scatter_svg(truth, report.aligned_estimate))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    try:
        densities = [float(v) for v in args.densities.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --densities {args.densities!r}") from None
    if not densities:
        raise UsageError("--densities is empty")
    cfg = _solver_config(args)
    rows = harness.density_sweep(densities, args.trials, args.n, args.noise, cfg, args.rng_seed,
                                 root_tol=args.root_tol, jobs=args.jobs)
    if args.out:
        harness.write_sweep_csv(rows, args.out)
    else:
        sys.stdout.write(harness.format_sweep_csv(rows))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"netloc: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParseError as exc:
        print(f"netloc: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"netloc: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ParseError, OSError) as exc:
        print(f"netloc: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoBracketError as exc:
        print(f"netloc: no bracket: {exc}", file=sys.stderr)
        return EXIT_NO_BRACKET
    except GenerationError as exc:
        print(f"netloc: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except LocalizationError as exc:
        print(f"netloc: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
