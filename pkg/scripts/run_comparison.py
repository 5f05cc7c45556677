"""Run every reconstruction method on one preset and tabulate the metrics.

    python3 scripts/run_comparison.py --preset desk --seeds 0 1 2 --out out/comparison
"""
import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from gflsar.config import METHODS, load_preset
from gflsar.pipeline import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="desk")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--cs-fraction", type=float, default=1.0)
    ap.add_argument("--out", default=None, help="write per-run outputs under this directory")
    args = ap.parse_args()

    base = replace(load_preset(args.preset), cs_fraction=args.cs_fraction)
    print(f"{'method':<10} {'median_mse':>12} {'mean_hit':>9} {'median_tbr':>11} {'graph_s':>8} {'iter_s':>8}")
    for method in METHODS:
        mse, hit, tbr, tg, ti = [], [], [], [], []
        for seed in args.seeds:
            cfg = replace(base, method=method, seed=seed)
            write = args.out is not None
            if write:
                cfg = replace(cfg, out=str(Path(args.out) / method / f"seed{seed}"))
            recon, m = run_experiment(cfg, write=write)
            mse.append(m.relative_mse)
            hit.append(np.nan if m.hit_rate is None else m.hit_rate)
            tbr.append(m.target_background_ratio)
            tg.append(recon.timings.get("graph", 0.0))
            ti.append(recon.timings.get("iterations", 0.0))
        print(f"{method:<10} {np.median(mse):12.4g} {np.nanmean(hit):9.3f} {np.median(tbr):11.4g}"
              f" {np.mean(tg):8.3f} {np.mean(ti):8.3f}")


if __name__ == "__main__":
    main()
