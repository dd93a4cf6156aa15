"""Mean purity against the number of views P on the planted-style benchmark.

    python3 scripts/sweep_views.py --views 2 4 6 12 --seeds 0 1 2 --out views.csv
"""

import argparse
import csv

import numpy as np

from styleco import pipeline as pl
from styleco import synth
from styleco.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--views", type=int, nargs="+", default=[2, 4, 6, 12])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--shapes", type=int, default=40)
    ap.add_argument("--cache", default=None)
    ap.add_argument("--out", default="views.csv")
    args = ap.parse_args()

    cache = pl.RenderCache(args.cache)
    inputs = {s: synth.benchmark_inputs(args.shapes, s) for s in args.seeds}
    rows = []
    for P in args.views:
        pur = []
        for seed, (_, meshes, truth) in inputs.items():
            cfg = RunConfig(seed=seed).replace(render__views=P)
            pur.append(pl.run_analysis(meshes, "unsupervised", None, cfg, truth, cache).purity)
        rows.append([P, f"{np.mean(pur):.4f}"] + [f"{p:.4f}" for p in pur])
        print(*rows[-1], flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["views", "mean_purity"] + [f"seed_{s}" for s in args.seeds])
        w.writerows(rows)


if __name__ == "__main__":
    main()
