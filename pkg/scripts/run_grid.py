#!/usr/bin/env python
"""Run the default experiment grid and write one artifact directory per cell.

Grid: d in {5, 10, 20}, tau in {5, 10, exact}, designs identity /
toeplitz(0.4) / equicorr(0.4), both models, Kaczmarz sketching, R = 200.
This is a desk-scale mirror of the full benchmark; expect the linear cells
to take minutes each and logistic cells somewhat longer.  Narrow the grid
with the flags below.
"""

from __future__ import annotations

import argparse
import itertools
import sys
import time
from pathlib import Path

from onsketch.config import make_config
from onsketch.harness import run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="root output directory")
    parser.add_argument("--models", default="linear", help="comma list: linear,logistic")
    parser.add_argument("--dims", default="5,10,20", help="comma list of dimensions")
    parser.add_argument("--taus", default="5,10,exact", help="comma list, ints or 'exact'")
    parser.add_argument("--designs", default="identity,toeplitz,equicorr")
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    models = args.models.split(",")
    dims = [int(v) for v in args.dims.split(",")]
    taus = args.taus.split(",")
    designs = args.designs.split(",")

    root = Path(args.out)
    for model, d, tau, design in itertools.product(models, dims, taus, designs):
        name = f"{model}_d{d}_{design}_tau{tau}"
        cfg = make_config(
            model=model, d=d, design=design, r=0.4, tau=tau,
            reps=args.reps, seed=args.seed, out=str(root / name),
        )
        started = time.perf_counter()
        summary = run_experiment(cfg, jobs=args.jobs)
        final = summary.aggregates[-1]
        print(
            f"{name}: mae={final.mae_mean:.4f} cov={final.coverage_pct:.1f}% "
            f"len={final.len_mean:.4f} ({time.perf_counter() - started:.0f}s)",
            flush=True,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
