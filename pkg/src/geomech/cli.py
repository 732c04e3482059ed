"""Command line interface: ``mech list``, ``mech run`` and ``mech verify``.

Exit codes: 0 every check passed, 1 some check failed, 2 usage or input
error, 3 numeric failure during integration or a solve.
"""

import argparse
import sys

from . import __version__, scenarios
from .errors import InputError, MechanicsError, NumericError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p):
    p.add_argument("scenario", help="scenario name, see `mech list`")
    p.add_argument("--config", metavar="FILE", help="TOML file with run settings; flags override it")
    p.add_argument("--dt", type=float, help="step size (default 1e-3)")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time (default 10)")
    p.add_argument("--method", help="Hamilton integrator: rk4, implicit_midpoint or leapfrog")
    p.add_argument("--seed", type=int, help="seed for sampled checks (default 42)")


def build_parser():
    parser = _Parser(prog="mech", description="Lagrangian and Hamiltonian mechanics with verified invariants.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list the built-in scenarios")
    run = sub.add_parser("run", help="integrate a scenario, write artifacts and print the verification matrix")
    _add_run_options(run)
    run.add_argument("--out", metavar="DIR", default=None, help="output directory (default ./out/<scenario>)")
    verify = sub.add_parser("verify", help="evaluate the verification matrix without writing files")
    _add_run_options(verify)
    return parser


def _config(args):
    overrides = {"dt": args.dt, "t_end": args.t_end, "method": args.method, "seed": args.seed}
    if getattr(args, "out", None) is not None or args.command == "run":
        overrides["out"] = args.out or f"out/{args.scenario}"
    scenarios.get(args.scenario)
    return scenarios.RunConfig.load(args.scenario, args.config, **overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, description, reference in scenarios.catalog():
            print(f"{name:<10} {description} [{reference}]")
        return EXIT_PASS
    try:
        cfg = _config(args)
        ctx = scenarios.run(cfg) if args.command == "run" else scenarios.verify(cfg)
    except InputError as exc:
        print(f"mech: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"mech: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MechanicsError as exc:
        print(f"mech: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in scenarios.summary_lines(ctx):
        print(line)
    if args.command == "run":
        print(f"artifacts written to {cfg.out}")
    return EXIT_PASS if ctx["passed"] else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
