"""Command-line entry point: ``gflsar run --config <path> ...``."""

import argparse
import logging
import sys

from .config import METHODS, load_config, load_preset
from .pipeline import run_experiment


def build_parser():
    p = argparse.ArgumentParser(prog="gflsar", description="Spotlight-SAR graph fused lasso experiments")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate and reconstruct one experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to an INI experiment config")
    src.add_argument("--preset", help="bundled preset name (desk, desk_extended, fullscale)")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--cs-fraction", type=float, dest="cs_fraction")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else load_preset(args.preset)
        cfg = cfg.with_overrides(method=args.method, cs_fraction=args.cs_fraction,
                                 seed=args.seed, out=args.out, workers=args.workers)
        _, metrics = run_experiment(cfg, write=True)
    except Exception as exc:
        print(f"gflsar: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for line in metrics.lines():
        print(line)
    print(f"outputs written to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
