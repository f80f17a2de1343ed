#!/usr/bin/env python3
"""
spiralsheet command-line tool

    spiralsheet.py solve alexander --a 1 --M 3
    spiralsheet.py solve general --config family.json --free mu,g --out solved.json
    spiralsheet.py verify --config family.json --suite matching
    spiralsheet.py sample --config family.json --t 1 --bounds=-2,2,-2,2 --nx 200 --ny 200 --out grid.csv
    spiralsheet.py energy --config family.json --r 1

JSON goes to stdout, diagnostics to stderr. Exit status: 0 success,
1 bad input, 2 solver failure, 3 verification failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from family_storage import dumps, load_family, load_settings, save_family, save_result
from grid_writer import GridWriter
from spiral_constraint import alexander_solve, constraint_report, general_solve
from spiral_errors import InvalidArgument, SpiralError
from spiral_field import enclosed_circulation, energy_in_ball, sample_grid
from spiral_model import alexander_family, family_to_dict
from spiral_verify import SUITES, run_verification

logger = logging.getLogger(__name__)

EXIT_VERIFICATION_FAILED = 3


class SpiralArgumentParser(argparse.ArgumentParser):
    """Usage errors become InvalidArgument so they share the exit-code path"""

    def error(self, message):
        raise InvalidArgument(f"{self.prog}: {message}")


def _emit(payload):
    sys.stdout.write(dumps(payload).decode('utf-8'))
    sys.stdout.flush()


def _parse_bounds(text: str):
    parts = text.split(',')
    if len(parts) != 4:
        raise InvalidArgument(f"--bounds expects x0,x1,y0,y1, got '{text}'")
    try:
        return tuple(float(part) for part in parts)
    except ValueError:
        raise InvalidArgument(f"--bounds expects four numbers, got '{text}'")


def solve_cmd(args, settings) -> int:
    if args.mode == 'alexander':
        if args.a is None or args.M is None:
            raise InvalidArgument("solve alexander needs --a and --M")
        g, mu = alexander_solve(args.a, args.M)
        family = alexander_family(args.a, args.M, g, mu)
        iterations = 0
        residual_max = constraint_report(family).residual_max
    else:
        if args.config is None:
            raise InvalidArgument("solve general needs --config")
        free = args.free.split(',') if args.free else []
        result = general_solve(load_family(args.config), free, max_iter=args.max_iter, tol=args.tol)
        family, iterations, residual_max = result

    report = constraint_report(family)
    if args.out and not save_family(args.out, family):
        raise InvalidArgument(f"cannot write {args.out}")

    _emit({
        'family': family_to_dict(family),
        'residual_max': residual_max,
        'iterations': iterations,
        'compat_holds': report.compat_holds,
    })
    return 0


def verify_cmd(args, settings) -> int:
    family = load_family(args.config)
    suites = SUITES if args.suite == 'all' else (args.suite,)
    report = run_verification(family, suites, settings, seed=args.seed, tol=args.tol)
    if args.out and not save_result(args.out, report):
        raise InvalidArgument(f"cannot write {args.out}")
    _emit(report)
    if not report['passed']:
        failed = [check['name'] for check in report['checks'] if check['status'] == 'FAIL']
        logger.error(f"Verification failed: {', '.join(failed)}")
        return EXIT_VERIFICATION_FAILED
    return 0


def sample_cmd(args, settings) -> int:
    family = load_family(args.config)
    grid = sample_grid(family, _parse_bounds(args.bounds), args.nx, args.ny, args.t,
                       tol=settings['tolerances']['on_sheet'])
    writer = GridWriter(args.out)
    rows = writer.write(grid)
    _emit({'out': str(args.out), 'rows': rows, 'on_sheet': grid.on_sheet_count, 't': grid.t})
    return 0


def energy_cmd(args, settings) -> int:
    if not args.r > 0:
        raise InvalidArgument(f"--r must be positive, got {args.r}")
    family = load_family(args.config)
    energy = energy_in_ball(family, args.r, limit=int(settings['quadrature']['energy_limit']))
    _emit({
        'E': energy,
        'C': energy / args.r ** 4,
        'circulation': enclosed_circulation(family, args.r, 1.0),
    })
    return 0


def build_parser() -> SpiralArgumentParser:
    common = SpiralArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true', help="Debug logging on stderr")
    common.add_argument('--settings', help="Tool settings JSON (default: ./spiralsheet.conf if present)")

    parser = SpiralArgumentParser(description="Self-similar logarithmic spiral vortex sheets")
    commands = parser.add_subparsers(dest='command', required=True, parser_class=SpiralArgumentParser)

    solve = commands.add_parser('solve', parents=[common], help="Solve the matching constraint")
    solve.add_argument('mode', choices=['alexander', 'general'])
    solve.add_argument('--a', type=float, help="Spiral pitch (alexander)")
    solve.add_argument('--M', type=int, help="Number of branches (alexander)")
    solve.add_argument('--config', help="Initial family JSON (general)")
    solve.add_argument('--free', default='', help="Comma-separated free variables: mu, g, g<k>, theta, theta<k>")
    solve.add_argument('--tol', type=float, default=1e-12, help="Residual tolerance")
    solve.add_argument('--max-iter', type=int, default=50, help="Gauss-Newton iteration cap")
    solve.add_argument('--out', help="Write the solved family config here")
    solve.set_defaults(handler=solve_cmd)

    verify = commands.add_parser('verify', parents=[common], help="Run verification suites")
    verify.add_argument('--config', required=True, help="Family JSON")
    verify.add_argument('--suite', default='all', choices=('all',) + SUITES)
    verify.add_argument('--tol', type=float, help="Override the matching tolerance")
    verify.add_argument('--seed', type=int, default=0, help="Sample-set seed")
    verify.add_argument('--out', help="Also write the report here")
    verify.set_defaults(handler=verify_cmd)

    sample = commands.add_parser('sample', parents=[common], help="Sample v and p on a grid to CSV")
    sample.add_argument('--config', required=True, help="Family JSON")
    sample.add_argument('--t', type=float, default=1.0, help="Time")
    sample.add_argument('--bounds', required=True, help="x0,x1,y0,y1")
    sample.add_argument('--nx', type=int, required=True)
    sample.add_argument('--ny', type=int, required=True)
    sample.add_argument('--out', required=True, help="CSV output path")
    sample.set_defaults(handler=sample_cmd)

    energy = commands.add_parser('energy', parents=[common], help="Kinetic energy in B(0, r)")
    energy.add_argument('--config', required=True, help="Family JSON")
    energy.add_argument('--r', type=float, required=True, help="Ball radius")
    energy.set_defaults(handler=energy_cmd)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InvalidArgument as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s: %(message)s', stream=sys.stderr, force=True)

    try:
        settings = load_settings(args.settings)
        return args.handler(args, settings)
    except SpiralError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    exit(main())
