"""Median relative MSE against the kept fraction of frequency samples.

    python3 scripts/cs_sweep.py --preset desk_extended --seeds 10
"""
import argparse
from dataclasses import replace

import numpy as np

from gflsar.config import load_preset
from gflsar.pipeline import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="desk_extended")
    ap.add_argument("--method", default="gfl-entv")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--fractions", type=float, nargs="+", default=[1.0, 0.75, 0.5, 0.25])
    args = ap.parse_args()

    base = load_preset(args.preset)
    bp = [run_experiment(replace(base, method="bp", seed=s), write=False)[1].relative_mse
          for s in range(args.seeds)]
    print(f"bp at fraction 1.0: median relative MSE {np.median(bp):.4g}")
    for f in args.fractions:
        errs = [run_experiment(replace(base, method=args.method, seed=s, cs_fraction=f),
                               write=False)[1].relative_mse for s in range(args.seeds)]
        print(f"{args.method} fraction {f:<5} median {np.median(errs):.4g}  "
              f"min {np.min(errs):.4g}  max {np.max(errs):.4g}", flush=True)


if __name__ == "__main__":
    main()
