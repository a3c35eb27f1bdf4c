"""
Main Entry Point for the ODE-DBN toolkit

Subcommands:
    validate <model>                 parse a model and print its compiled DBN
    simulate --config <json>         write the RK4 benchmark trajectory
    filter --config <json>           run the particle filter and score it
    plot --result --truth --var --out
                                     render one variable as SVG

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from core.commands import (EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION,
                           cmd_filter, cmd_plot, cmd_simulate, cmd_validate)
from core.errors import NumericError, ValidationError

logger = logging.getLogger("ode_dbn")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Compile ODE models into DBNs and filter them against sparse evidence"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log debug diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="Parse a model and print its DBN parent sets")
    p.add_argument("model", help="Path to an .ode model file")
    p.add_argument("--dt", type=float, default=0.01, help="Euler step shown in the DBN listing")

    p = sub.add_parser("simulate", help="Write the RK4 benchmark trajectory")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="Output CSV (default <output_dir>/truth.csv)")

    p = sub.add_parser("filter", help="Run the particle filter of a configuration")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="Override the filter seed")
    p.add_argument("--threads", type=int, default=None, help="Override the worker thread count")

    p = sub.add_parser("plot", help="Plot a filtered variable or parameter as SVG")
    p.add_argument("--result", required=True, help="result.csv written by filter")
    p.add_argument("--truth", required=True, help="Benchmark trajectory CSV")
    p.add_argument("--evidence", default=None, help="Evidence CSV (drawn as dots)")
    p.add_argument("--var", required=True, help="Variable or parameter name")
    p.add_argument("--out", required=True, help="Output SVG path")
    p.add_argument("--true-value", type=float, default=None,
                   help="Known value of a parameter, drawn as a dashed line")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main execution function.

    Args:
        argv: Command-line arguments (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "validate":
            cmd_validate(args.model, dt=args.dt)
        elif args.command == "simulate":
            cmd_simulate(args.config, output=args.out)
        elif args.command == "filter":
            cmd_filter(args.config, seed=args.seed, n_threads=args.threads)
        else:
            cmd_plot(args.result, args.truth, args.var, args.out,
                     evidence_path=args.evidence, true_value=args.true_value)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
