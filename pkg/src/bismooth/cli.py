"""Command-line front end: ``bismooth solve ...``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .experiment import SOLVERS, ConfigError, ExperimentConfig, load_config, parse_solvers, parse_verify
from .io import MatrixMarketError


def build_parser():
    parser = argparse.ArgumentParser(prog="bismooth", description="Bi-CG / Bi-CR solvers and residual smoothing.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run solvers on a system and write convergence histories")
    solve.add_argument("--config", help="flat key = value config file; flags override it")
    solve.add_argument("--matrix", help="builtin:toeplitz:N | builtin:spd:N:SEED | file:PATH.mtx")
    solve.add_argument("--rhs", help="ones-solution | file:PATH | explicit:v1,v2,...")
    solve.add_argument("--x0", help="zero | file:PATH | explicit:v1,v2,...")
    solve.add_argument("--shadow", help="equal-b | equal-r0 | file:PATH | explicit:v1,v2,...")
    solve.add_argument(
        "--solver",
        action="append",
        metavar="NAME",
        help=f"repeatable or comma-separated; one of {', '.join(SOLVERS)}",
    )
    solve.add_argument("--tol", type=float)
    solve.add_argument("--max-iter", type=int)
    solve.add_argument("--breakdown-eps", type=float)
    solve.add_argument("--history", choices=("norms", "window", "full"))
    solve.add_argument(
        "--verify",
        nargs="?",
        const="window=15,tol=1e-8",
        metavar="window=W,tol=T",
        help="also run the bi-orthogonality checks ('off' disables)",
    )
    solve.add_argument("--out-dir")
    return parser


def config_from_args(args) -> ExperimentConfig:
    settings = load_config(args.config) if args.config else {}
    for key in ("matrix", "rhs", "x0", "shadow", "tol", "max_iter", "breakdown_eps", "history", "out_dir"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.solver:
        settings["solvers"] = tuple(s for item in args.solver for s in parse_solvers(item))
    if args.verify is not None:
        settings.update(parse_verify(args.verify))
    return dataclasses.replace(ExperimentConfig(), **settings)


def main(argv=None) -> int:
    from .experiment import run_experiment

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        return run_experiment(cfg, stdout=sys.stdout)
    except (ConfigError, MatrixMarketError) as exc:
        print(f"bismooth: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bismooth: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
