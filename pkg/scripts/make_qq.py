#!/usr/bin/env python
"""QQ comparison of accelerated vs unit-gamma (momentum without provable gain).

Runs both parameter modes on the same seeds, standardizes the terminal
statistics by the oracle covariance of the accelerated configuration, and
writes qq_estimated.csv / qq_unit.csv plus the KS statistics.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from onsketch.config import make_config
from onsketch.harness import compute_oracle, emit_qq, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--model", default="linear")
    parser.add_argument("--d", type=int, default=10)
    parser.add_argument("--design", default="identity")
    parser.add_argument("--tau", default="5")
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    out = Path(args.out)
    base = dict(
        model=args.model, d=args.d, design=args.design, r=0.4, tau=args.tau,
        steps=args.steps, reps=args.reps, seed=args.seed,
    )
    oracle = compute_oracle(make_config(**base))
    for mode in ("estimated", "unit"):
        cfg = make_config(gamma_mode=mode, **base)
        summary = run_experiment(cfg, jobs=args.jobs, write=False)
        qq = emit_qq(cfg, oracle.sigma_star, summary.terminal, out / f"qq_{mode}.csv")
        print(f"{mode}: KS = {qq.ks:.4f} -> {out / f'qq_{mode}.csv'}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
