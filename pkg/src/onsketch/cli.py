"""Command-line interface: run / qq / oracle / selftest subcommands."""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .config import parse_config
from .errors import OnsketchError
from .harness import compute_oracle, emit_qq, run_experiment
from .selftest import run_selftest

_CONFIG_FLAGS = [
    ("model", str, "linear | logistic"),
    ("d", int, "problem dimension"),
    ("design", str, "identity | toeplitz | equicorr"),
    ("r", float, "design correlation in [0, 1)"),
    ("sigma2", float, "linear-model noise variance"),
    ("sketch", str, "kaczmarz | gaussian"),
    ("columns", int, "sketch columns (gaussian only; kaczmarz is 1)"),
    ("tau", str, "sketch steps per solve, or 'exact'"),
    ("gamma_mode", str, "estimated | unit"),
    ("steps", int, "online steps per replication"),
    ("reps", int, "number of replications"),
    ("seed", int, "base seed; rep k uses streams (seed, 2k) and (seed, 2k+1)"),
    ("c_phi", float, "stepsize constant"),
    ("phi", float, "stepsize exponent in (0.5, 1]"),
    ("refresh_every", int, "recompute (mu, nu) every this many steps"),
    ("mc_samples_mu_nu", int, "monte-carlo draws for gaussian (mu, nu)"),
    ("q", float, "nominal miscoverage level"),
    ("checkpoints", str, "comma-separated checkpoint steps"),
    ("out", str, "output directory"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file", default=None)
    for name, typ, help_text in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=typ, help=help_text, default=None)


def _collect_overrides(args: argparse.Namespace) -> dict:
    return {name: getattr(args, name) for name, _, _ in _CONFIG_FLAGS}


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("ONSKETCH_JOBS")
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onsketch",
        description="Online Newton with accelerated sketching: experiments and inference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a replicated experiment and write CSV/JSON artifacts")
    _add_config_flags(run_p)
    run_p.add_argument("--jobs", type=int, default=None, help="worker processes (env ONSKETCH_JOBS)")

    qq_p = sub.add_parser("qq", help="replicated terminal statistics vs the oracle covariance")
    _add_config_flags(qq_p)
    qq_p.add_argument("--jobs", type=int, default=None, help="worker processes (env ONSKETCH_JOBS)")

    or_p = sub.add_parser("oracle", help="print K*, Gamma*, Sigma* for a configuration")
    _add_config_flags(or_p)

    sub.add_parser("selftest", help="run fast invariant checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return 0 if run_selftest() else 1

        cfg = parse_config(args.config, _collect_overrides(args))
        if args.command == "run":
            if cfg.out is None:
                print("error: run requires --out", file=sys.stderr)
                return 2
            started = time.perf_counter()
            summary = run_experiment(cfg, jobs=_jobs(args))
            elapsed = time.perf_counter() - started
            last = summary.aggregates[-1]
            print(
                f"wrote {cfg.out}/trials.csv and summary.json "
                f"({cfg.reps} reps x {cfg.steps} steps in {elapsed:.1f}s)"
            )
            print(
                f"final checkpoint t={last.t}: mae={last.mae_mean:.4e} "
                f"coverage={last.coverage_pct:.1f}% len={last.len_mean:.4e}"
            )
            return 0

        if args.command == "qq":
            summary = run_experiment(cfg, jobs=_jobs(args), write=cfg.out is not None)
            oracle = compute_oracle(cfg)
            out_path = f"{cfg.out}/qq.csv" if cfg.out is not None else None
            result = emit_qq(cfg, oracle.sigma_star, summary.terminal, out_path)
            crit = 1.36 / np.sqrt(cfg.reps)
            print(f"KS statistic vs N(0,1): {result.ks:.4f} (5% critical ~ {crit:.4f})")
            if out_path is not None:
                print(f"wrote {out_path}")
            return 0

        if args.command == "oracle":
            oracle = compute_oracle(cfg)
            np.set_printoptions(precision=6, suppress=True, linewidth=140)
            print(f"zeta = {oracle.zeta}")
            if oracle.mu_star is not None:
                print(f"mu* = {oracle.mu_star:.6f}  nu* = {oracle.nu_star:.6f}")
                print(
                    f"params: alpha={oracle.params.alpha:.6f} beta={oracle.params.beta:.6f} "
                    f"gamma={oracle.params.gamma:.6f} tau={oracle.params.tau}"
                )
                print(f"tau diagnostic tau*(1-sqrt(mu/nu))^(tau-2) = {oracle.tau_diagnostic:.6f}")
            print(f"methods: munu={oracle.munu_method} gamma={oracle.gamma_method}")
            for label, mat in (
                ("K*", oracle.k_star),
                ("Gamma*", oracle.gamma_star),
                ("Omega*", oracle.omega_star),
                ("Sigma*", oracle.sigma_star),
            ):
                print(f"{label} =")
                print(mat)
            print(f"lyapunov residual = {oracle.lyapunov_residual():.3e}")
            return 0

        raise AssertionError(f"unhandled command {args.command}")
    except OnsketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
