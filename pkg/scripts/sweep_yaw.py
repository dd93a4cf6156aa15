"""Sensitivity of unsupervised purity to the benchmark's random yaw about +Y.

Shapes are only roughly aligned; this shows how much misalignment the fixed
camera ring tolerates.

    python3 scripts/sweep_yaw.py --yaws 0 15 30 45 --seeds 0 1 --out yaw.csv
"""

import argparse
import csv

from styleco import pipeline as pl
from styleco import synth
from styleco.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--yaws", type=float, nargs="+", default=[0.0, 15.0, 30.0, 45.0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
    ap.add_argument("--shapes", type=int, default=40)
    ap.add_argument("--cache", default=None)
    ap.add_argument("--out", default="yaw.csv")
    args = ap.parse_args()

    cache = pl.RenderCache(args.cache)
    rows = []
    for yaw in args.yaws:
        for seed in args.seeds:
            _, meshes, truth = synth.benchmark_inputs(args.shapes, seed, yaw=yaw)
            res = pl.run_analysis(meshes, "unsupervised", None, RunConfig(seed=seed), truth, cache)
            rows.append([yaw, seed, f"{res.purity:.4f}", res.n_clusters])
            print(*rows[-1], flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["yaw_deg", "seed", "purity", "n_clusters"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
