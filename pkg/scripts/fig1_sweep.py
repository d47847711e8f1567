"""Range of supported market returns against concentration.

Runs the power-law sweep, writes the CSV the CLI would write, and prints each
curve next to the exact unbounded range (1 -+ sqrt(N w.w)) / 2 so the effect of
the beta box is visible.

    python scripts/fig1_sweep.py --out fig1.csv [--starts 64] [--seed 0]
"""
import argparse
import os

import numpy as np

from endo_capm.cli import SWEEP_HEADER, to_csv, write_atomic
from endo_capm.feasibility import DEFAULT_GAMMAS, DEFAULT_SIZES, default_grid, hyperplane_range, sweep_concentration
from endo_capm.market_structure import WeightLaw, power_law_weights


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="fig1.csv")
    ap.add_argument("--starts", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES))
    ap.add_argument("--gmax", type=float, default=max(DEFAULT_GAMMAS))
    args = ap.parse_args()

    gammas = [round(g, 10) for g in np.arange(0, args.gmax + 1e-9, 0.1)]
    grid = default_grid(gammas, args.sizes)
    workers = int(os.environ.get("ENDO_CAPM_THREADS", "0")) or (os.cpu_count() or 1)
    recs = sweep_concentration(grid, 1.0, n_starts=args.starts, seed=args.seed, workers=workers)
    write_atomic(to_csv(SWEEP_HEADER, [[getattr(r, k) for k in SWEEP_HEADER] for r in recs]), args.out)

    print(f"{'N':>5} {'gamma':>6} {'HHI':>7} {'min/r':>8} {'max/r':>8} {'exact min':>10} {'exact max':>10}")
    for r in recs:
        if round(r.gamma * 10) % 5:
            continue
        lo, hi = hyperplane_range(power_law_weights(WeightLaw(r.gamma, r.n_assets)))
        print(f"{r.n_assets:5d} {r.gamma:6.2f} {r.hhi:7.4f} {r.mu_min_over_r:8.3f} {r.mu_max_over_r:8.3f} "
              f"{lo:10.3f} {hi:10.3f}")


if __name__ == "__main__":
    main()
