"""Command-line entry point.

    satnls <mode> [--config FILE] [--out DIR] [--ladder-max-h V]
                  [--threads N] [--allow-large]

Modes: groundstate, evolve-cnfd, evolve-ssfm, compare, convergence-table,
mms-study.  Without a config file every mode runs the reference soliton
experiment defaults; see README for the config schema.
"""

from __future__ import annotations

import argparse
import sys

from .config import MODES, ConfigError, load_config, parse_real
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satnls",
        description="Crank-Nicolson / split-step solvers for the 2D saturable "
        "NLS equation with cubic loss",
    )
    sub = parser.add_subparsers(dest="mode", required=True, metavar="|".join(MODES))
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", default=None, help="INI config file (defaults apply if omitted)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--ladder-max-h", default=None,
                       help="smallest mesh size run without --allow-large (e.g. 2^-4)")
        p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
        p.add_argument("--allow-large", action="store_true",
                       help="run ladder rungs beyond the desk-scale cap")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "out_dir": args.out,
        "threads": args.threads,
        "ladder_max_h": None if args.ladder_max_h is None else parse_real(args.ladder_max_h),
    }
    if args.allow_large:
        overrides["allow_large"] = True
    try:
        cfg = load_config(args.config, mode=args.mode, **overrides)
    except (ConfigError, OSError) as exc:
        print(f"satnls: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
