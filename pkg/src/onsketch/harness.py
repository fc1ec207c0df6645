"""Experiment runner: replicated trajectories, metrics, QQ data, file outputs.

Replication k draws from streams ``(seed, 2k)`` (data) and ``(seed, 2k + 1)``
(solver), so results are independent of execution order and of the ``jobs``
setting; the summary is a pure function of the configuration.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import InvalidConfig, OracleUnavailable
from .inference import confidence_interval, normal_cdf, normal_quantile
from .kernel import kernel_supported, run_trajectory_fast
from .models import DEFAULT_POP_SEED
from .newton import run_trajectory
from .oracle import LimitingCovariance, limiting_covariance
from .rng import RngStream

CSV_HEADER = "rep,t,phi_t,mae,center,lo,hi,covered,ci_len"


@dataclass(frozen=True)
class TrialRow:
    rep: int
    t: int
    phi: float
    mae: float
    err2: float
    center: float
    lo: float
    hi: float
    covered: bool
    ci_len: float


@dataclass(frozen=True)
class CheckpointAggregate:
    t: int
    mae_mean: float
    mae_se: float
    coverage_pct: float
    coverage_se_pct: float
    len_mean: float
    len_se: float
    err2_median: float


@dataclass
class Summary:
    config: ExperimentConfig
    aggregates: list[CheckpointAggregate]
    rows: list[TrialRow]
    terminal: np.ndarray  # (reps, d) terminal iterates
    meta: dict[str, Any]

    def to_flat_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for key, value in self.config.as_dict().items():
            out[f"config.{key}"] = value
        for key, value in self.meta.items():
            out[f"meta.{key}"] = value
        for agg in self.aggregates:
            prefix = f"checkpoint.{agg.t}"
            out[f"{prefix}.mae_mean"] = agg.mae_mean
            out[f"{prefix}.mae_se"] = agg.mae_se
            out[f"{prefix}.coverage_pct"] = agg.coverage_pct
            out[f"{prefix}.coverage_se_pct"] = agg.coverage_se_pct
            out[f"{prefix}.len_mean"] = agg.len_mean
            out[f"{prefix}.len_se"] = agg.len_se
            out[f"{prefix}.err2_median"] = agg.err2_median
        return out


def _rep_arrays(cfg: ExperimentConfig, rep: int, use_kernel: bool):
    """One replication; returns (terminal_x, cp_x, cp_phi, cp_sigma)."""
    gt = cfg.ground_truth()
    data_rng = RngStream(cfg.seed, 2 * rep)
    solver_rng = RngStream(cfg.seed, 2 * rep + 1)
    checkpoints = np.asarray(cfg.checkpoints, dtype=np.int64)
    if use_kernel and kernel_supported(cfg.model, cfg.sketch, cfg.columns, cfg.tau):
        return run_trajectory_fast(
            model=cfg.model,
            x_star=gt.x_star,
            chol_a=gt.chol(),
            sigma2=cfg.sigma2,
            sketch_kind=cfg.sketch,
            tau=cfg.tau,
            gamma_mode=cfg.gamma_mode,
            refresh_every=cfg.refresh_every,
            mc_samples_mu_nu=cfg.mc_samples_mu_nu,
            c_phi=cfg.c_phi,
            phi=cfg.phi,
            steps=cfg.steps,
            checkpoints=checkpoints,
            data_gen=data_rng.gen,
            solver_gen=solver_rng.gen,
        )
    result = run_trajectory(
        cfg.model,
        gt,
        cfg.newton_config(),
        cfg.schedule(),
        cfg.steps,
        list(cfg.checkpoints),
        data_rng,
        solver_rng,
    )
    cp_x = np.array([c.x for c in result.checkpoints])
    cp_phi = np.array([c.phi for c in result.checkpoints])
    cp_sigma = np.array([c.sigma_hat for c in result.checkpoints])
    return result.terminal_x, cp_x, cp_phi, cp_sigma


def _rep_worker(args):
    cfg, rep, use_kernel = args
    return rep, _rep_arrays(cfg, rep, use_kernel)


def run_experiment(
    cfg: ExperimentConfig,
    jobs: int = 1,
    use_kernel: bool = True,
    write: bool = True,
) -> Summary:
    """Run all replications, aggregate the inference metrics, write artifacts."""
    if write and cfg.out is None:
        raise InvalidConfig("out: an output directory is required to write artifacts")
    gt = cfg.ground_truth()
    d = cfg.d
    w = np.full(d, 1.0 / d)
    target = float(w @ gt.x_star)

    results: dict[int, tuple] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rep, arrays in pool.map(
                _rep_worker, [(cfg, k, use_kernel) for k in range(cfg.reps)], chunksize=4
            ):
                results[rep] = arrays
    else:
        for rep in range(cfg.reps):
            results[rep] = _rep_arrays(cfg, rep, use_kernel)

    rows: list[TrialRow] = []
    terminal = np.zeros((cfg.reps, d))
    for rep in range(cfg.reps):
        terminal_x, cp_x, cp_phi, cp_sigma = results[rep]
        terminal[rep] = terminal_x
        for i, t in enumerate(cfg.checkpoints):
            diff = cp_x[i] - gt.x_star
            ci = confidence_interval(w, cp_x[i], cp_sigma[i], float(cp_phi[i]), cfg.q)
            rows.append(
                TrialRow(
                    rep=rep,
                    t=int(t),
                    phi=float(cp_phi[i]),
                    mae=float(np.abs(diff).mean()),
                    err2=float(np.linalg.norm(diff)),
                    center=ci.center,
                    lo=ci.lo,
                    hi=ci.hi,
                    covered=ci.covers(target),
                    ci_len=ci.length,
                )
            )

    aggregates = _aggregate(rows, cfg)
    meta = {
        "version": __version__,
        "target": target,
        "stream_scheme": "data=(seed,2k) solver=(seed,2k+1)",
        "engine": "kernel"
        if use_kernel and kernel_supported(cfg.model, cfg.sketch, cfg.columns, cfg.tau)
        else "driver",
    }
    if cfg.model == "logistic":
        meta["pop_seed"] = DEFAULT_POP_SEED
    summary = Summary(config=cfg, aggregates=aggregates, rows=rows, terminal=terminal, meta=meta)
    if write:
        write_artifacts(summary)
    return summary


def _aggregate(rows: list[TrialRow], cfg: ExperimentConfig) -> list[CheckpointAggregate]:
    out = []
    reps = cfg.reps
    for t in cfg.checkpoints:
        sel = [r for r in rows if r.t == t]
        mae = np.array([r.mae for r in sel])
        lens = np.array([r.ci_len for r in sel])
        err2 = np.array([r.err2 for r in sel])
        cov = np.array([1.0 if r.covered else 0.0 for r in sel])
        p = float(cov.mean())
        out.append(
            CheckpointAggregate(
                t=int(t),
                mae_mean=float(mae.mean()),
                mae_se=float(mae.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
                coverage_pct=100.0 * p,
                coverage_se_pct=100.0 * math.sqrt(max(p * (1.0 - p), 0.0) / reps),
                len_mean=float(lens.mean()),
                len_se=float(lens.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
                err2_median=float(np.median(err2)),
            )
        )
    return out


def write_artifacts(summary: Summary) -> tuple[Path, Path]:
    out_dir = Path(summary.config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials_path = out_dir / "trials.csv"
    lines = [CSV_HEADER]
    for r in summary.rows:
        lines.append(
            f"{r.rep},{r.t},{r.phi!r},{r.mae!r},{r.center!r},{r.lo!r},{r.hi!r},"
            f"{int(r.covered)},{r.ci_len!r}"
        )
    trials_path.write_text("\n".join(lines) + "\n")
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary.to_flat_dict(), indent=2, sort_keys=True) + "\n")
    return trials_path, summary_path


def ks_statistic(values: np.ndarray) -> float:
    """One-sample Kolmogorov-Smirnov distance to the standard normal."""
    u = np.sort(np.asarray(values, dtype=float))
    n = u.shape[0]
    cdf = np.array([normal_cdf(v) for v in u])
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


@dataclass(frozen=True)
class QQResult:
    theoretical: np.ndarray
    empirical: np.ndarray
    ks: float


def emit_qq(
    cfg: ExperimentConfig,
    sigma_star: np.ndarray,
    terminal: np.ndarray,
    out_path: str | Path | None = None,
) -> QQResult:
    """Standardized terminal statistics against normal plotting positions.

    u_k = (w^T x_T^(k) - w^T x*) / sqrt(phi_T w^T Sigma* w), sorted and paired
    with the (k - 0.5)/R standard normal quantiles; also reports the KS
    statistic of the u_k against N(0, 1).
    """
    gt = cfg.ground_truth()
    d = cfg.d
    w = np.full(d, 1.0 / d)
    phi_t = cfg.schedule().at(cfg.steps)
    denom = math.sqrt(phi_t * float(w @ sigma_star @ w))
    if denom <= 0.0:
        raise OracleUnavailable("oracle quadratic form is not positive")
    u = np.sort((terminal @ w - float(w @ gt.x_star)) / denom)
    n = u.shape[0]
    theo = np.array([normal_quantile((k - 0.5) / n) for k in range(1, n + 1)])
    ks = ks_statistic(u)
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["theoretical,empirical"]
        lines += [f"{a!r},{b!r}" for a, b in zip(theo, u)]
        path.write_text("\n".join(lines) + "\n")
    return QQResult(theoretical=theo, empirical=u, ks=ks)


def compute_oracle(cfg: ExperimentConfig) -> LimitingCovariance:
    """Limiting covariance for a configuration (wrapped oracle errors)."""
    try:
        return limiting_covariance(cfg.ground_truth(), cfg.newton_config(), cfg.schedule())
    except OracleUnavailable:
        raise
    except Exception as exc:
        raise OracleUnavailable(f"oracle computation failed: {exc}") from exc
