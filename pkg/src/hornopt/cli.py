"""``hornopt`` command line: run, verify, oracle."""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import spectral
from .artifacts import emit_artifacts, read_csv, spectral_verification, write_csv
from .config import load_config
from .errors import HornoptError
from .grid import Grid
from .model import PhysicalParams
from .optimize import optimize

log = logging.getLogger("hornopt")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="hornopt", description="Optimal-control design of horn bore profiles.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run_p = sub.add_parser("run", help="optimize a bore and write artifacts")
    run_p.add_argument("--config", help="config file or preset name (paper_n2, paper_n5, paper_n10)")
    run_p.add_argument("--seed", type=int, help="override optimize.seed")
    run_p.add_argument("--out", help="override cli.output_dir")

    ver_p = sub.add_parser("verify", help="spectrum of the bore in a duct.csv")
    ver_p.add_argument("--duct", required=True)
    ver_p.add_argument("--modes", type=int, default=5)

    orc_p = sub.add_parser("oracle", help="analytic cylinder/cone eigenpair")
    orc_p.add_argument("--kind", choices=("cylinder", "cone"), required=True)
    orc_p.add_argument("--n", type=int, required=True)
    orc_p.add_argument("--length", type=float, default=PhysicalParams().L)
    orc_p.add_argument("--m", type=int, default=1025)
    orc_p.add_argument("--out", help="also write x,phi,dphi to this CSV")
    return parser


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("HORNOPT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def run(config, out_dir=None) -> int:
    """Optimize, verify and emit; returns the process exit code."""
    problem = config.problem()
    result = optimize(problem, config.opt.optimizer_config())
    verification = spectral_verification(result, problem)
    emit_artifacts(result, problem, config, out_dir or config.output_dir, verification)
    residual = float(np.max(np.abs(result.report.terminal_residuals)))
    print(f"J={result.report.penalized:.10g} iterations={result.iterations} "
          f"validity={result.validity:.6g} max_residual={residual:.3e} "
          f"converged={str(result.converged).lower()}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_run(args, parser):
    if not args.config:
        parser.print_usage(sys.stderr)
        print("hornopt run: error: --config is required", file=sys.stderr)
        return EXIT_ERROR
    config = load_config(args.config)
    if args.seed is not None:
        config.opt.seed = args.seed
    return run(config, args.out)


def _cmd_verify(args):
    header, cols = read_csv(args.duct)
    if "x" not in cols or "D" not in cols:
        raise HornoptError(f"{args.duct}: expected columns x and D, got {header}")
    x = cols["x"]
    grid = Grid(x.size, float(x[-1]))
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-12 * grid.length):
        raise HornoptError(f"{args.duct}: x column is not a uniform grid on [0, L]")
    profile = spectral.BoreProfile(grid, cols["D"])
    pairs = spectral.eigen_solve(profile, args.modes)
    out = {
        "wave_numbers": [p.k for p in pairs],
        "eigenvalues": [p.lam for p in pairs],
        "interior_zeros": [p.interior_zeros for p in pairs],
        "orthogonality": spectral.orthogonality_check(pairs, profile),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_oracle(args):
    params = PhysicalParams(L=args.length)
    grid = Grid(args.m, args.length)
    pair = spectral.analytic_oracle(args.kind, params, args.n, grid)
    print(json.dumps({"kind": args.kind, "n": args.n, "L": args.length,
                      "k": pair.k, "lambda": pair.lam}, indent=2))
    if args.out:
        write_csv(args.out, ["x", "phi", "dphi"], [grid.nodes, pair.phi, pair.dphi])
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        if args.command == "run":
            return _cmd_run(args, parser)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_oracle(args)
    except (HornoptError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
