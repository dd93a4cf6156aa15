"""Purity against the shared-factor proportion eta on the planted-style benchmark.

    python3 scripts/sweep_eta.py --seed 0 --out eta.csv
"""

import argparse
import csv

from styleco import pipeline as pl
from styleco import synth
from styleco.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--shapes", type=int, default=40)
    ap.add_argument("--etas", type=float, nargs="+", default=[0.05, 0.2, 0.5, 0.8, 1.0])
    ap.add_argument("--cache", default=None)
    ap.add_argument("--out", default="eta.csv")
    args = ap.parse_args()

    _, meshes, truth = synth.benchmark_inputs(args.shapes, args.seed)
    cache = pl.RenderCache(args.cache)
    rows = []
    for eta in args.etas:
        cfg = RunConfig(seed=args.seed).replace(fusion__eta=eta)
        res = pl.run_analysis(meshes, "unsupervised", None, cfg, truth, cache)
        rows.append([eta, f"{res.purity:.4f}", res.n_clusters])
        print(*rows[-1], flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "purity", "n_clusters"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
