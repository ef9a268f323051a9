"""
Command-line entry point.

    python -m app.cli alpha  --data d.csv --alpha 0.05 --zeta auto
    python -m app.cli reduce --data d.csv --rho 0.9 --eta 0.09 --seed 7
    python -m app.cli opf    --case case6 --seed 7
    python -m app.cli verify varrho --trials 10000 --seed 1

Exit codes: 0 success, 1 computational failure, 2 usage or input error.
"""
import argparse
import sys
from typing import List, Optional

from app.cli.commands import alpha, opf, reduce, verify
from app.cli.common import resolve_config
from app.core.config import settings
from app.core.exceptions import EXIT_OK, handle_cli_exception
from app.core.logging import setup_logging

COMMANDS = {
    "alpha": (alpha.register, alpha.cmd_alpha),
    "reduce": (reduce.register, reduce.cmd_reduce),
    "opf": (opf.register, opf.cmd_opf),
    "verify": (verify.register, verify.cmd_verify),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="dataset path (CSV or JSON)")
    common.add_argument("--header", action="store_true", default=None, help="CSV has a header line")
    common.add_argument("--r1", type=int, help="number of leading integer columns")
    common.add_argument("--alpha", type=float, help=f"probability level (default {settings.DEFAULT_ALPHA})")
    common.add_argument("--rho", type=float, help=f"target probability for z (default {settings.DEFAULT_RHO})")
    common.add_argument("--eta", type=float, help="SDS radius (default: the bandwidth)")
    common.add_argument("--bbar", dest="b_bar", type=int, help="upper bound on boundary points")
    common.add_argument("--seed", type=int, help="random seed (fallback: CONTOUR_OPT_SEED)")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials")
    common.add_argument("--kkt-tol", dest="kkt_tol", type=float, help="solver KKT tolerance")
    common.add_argument("--max-iter", dest="max_iter", type=int, help="solver iteration limit")
    common.add_argument("--config", help="JSON config file (flags take precedence)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads for parallel stages")
    common.add_argument("--no-timestamp", dest="no_timestamp", action="store_true", default=None,
                        help="omit timestamps and timings for byte-identical reports")
    common.add_argument("--log-level", dest="log_level", help="override LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="contour-opt",
                                     description=f"{settings.APP_NAME} {settings.APP_VERSION}: "
                                                 "probability-contour constrained optimization")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for register, _ in COMMANDS.values():
        register(subparsers, [common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        config = resolve_config(args)
        COMMANDS[args.command][1](config)
    except Exception as e:
        return handle_cli_exception(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
