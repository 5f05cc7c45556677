"""Grid search over sparsity and fusion penalties for one method.

    python3 scripts/tune_penalties.py --preset desk --method gfl-entv \
        --lambda-e 0.003 0.01 0.03 --lambda-f 0 0.001 0.003 --c 0.1 0.3 --seeds 3
"""
import argparse
import itertools
from dataclasses import replace

import numpy as np

from gflsar.config import load_preset
from gflsar.pipeline import run_experiment
from gflsar.solver import GflParams


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="desk")
    ap.add_argument("--method", default="gfl-entv")
    ap.add_argument("--lambda-e", type=float, nargs="+", default=[0.003, 0.01, 0.03])
    ap.add_argument("--lambda-f", type=float, nargs="+", default=[0.0, 0.001, 0.003])
    ap.add_argument("--c", type=float, nargs="+", default=[0.1, 0.3, 1.0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--cs-fraction", type=float, default=1.0)
    args = ap.parse_args()

    base = replace(load_preset(args.preset), method=args.method, cs_fraction=args.cs_fraction)
    print(f"{'c':>6} {'lambda_e':>9} {'lambda_f':>9} {'median_mse':>11} {'mean_hit':>9}")
    for c, le, lf in itertools.product(args.c, args.lambda_e, args.lambda_f):
        solver = dict(base.solver)
        solver[args.method] = GflParams(le, lf, c_u=c, c_z=c)
        runs = [run_experiment(replace(base, solver=solver, seed=s), write=False)[1]
                for s in range(args.seeds)]
        hits = [np.nan if m.hit_rate is None else m.hit_rate for m in runs]
        print(f"{c:6g} {le:9g} {lf:9g} {np.median([m.relative_mse for m in runs]):11.4g}"
              f" {np.nanmean(hits):9.3f}", flush=True)


if __name__ == "__main__":
    main()
