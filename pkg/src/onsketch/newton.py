"""Online Newton driver: stream samples, average Hessians, take sketched steps.

At step t the driver solves ``B_t dx = -g_t`` where ``B_t`` is the running
mean of the per-sample Hessians of steps 0..t-1 (the current sample's Hessian
enters the average only after the step, keeping ``B_t`` independent of the
fresh gradient noise), then moves ``x_{t+1} = x_t + phi_t z_tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accel_params import (
    GammaMode,
    SolverParams,
    mu_nu_exact_kaczmarz,
    mu_nu_mc,
    params_from_mu_nu,
)
from .errors import DegenerateSketchDistribution, InvalidConfig, InvalidStep, NumericalBlowup
from .inference import RunningCovariance
from .models import GroundTruth, ModelKind, Sample, grad_hess, sigmoid
from .nasketch import solve
from .rng import RngStream
from .sketching import SketchSpec

# samples are pre-drawn in blocks of this many steps; the compiled kernel
# follows the same convention so both drivers consume identical streams
DATA_BLOCK = 8192

RIDGE_DELTA = 1e-6


@dataclass(frozen=True)
class StepSchedule:
    """Vanishing stepsize phi_t = c_phi / (t + 1)^phi."""

    c_phi: float = 1.0
    phi: float = 0.501

    def __post_init__(self):
        if not self.c_phi > 0.0:
            raise InvalidConfig("c_phi must be positive")
        if not (0.5 < self.phi <= 1.0):
            raise InvalidConfig(f"phi must be in (0.5, 1], got {self.phi}")

    def at(self, t: int) -> float:
        return self.c_phi / (t + 1) ** self.phi


@dataclass(frozen=True)
class NewtonConfig:
    """Solver-side configuration of the Newton iteration."""

    model: ModelKind
    sketch: SketchSpec | None
    tau: int | None
    gamma_mode: GammaMode = "estimated"
    refresh_every: int = 1
    mc_samples_mu_nu: int = 200
    ridge_delta: float = RIDGE_DELTA

    def __post_init__(self):
        if self.tau is not None and self.sketch is None:
            raise InvalidConfig("sketched mode requires a sketch spec")
        if self.refresh_every < 1:
            raise InvalidConfig("refresh_every must be >= 1")


@dataclass
class NewtonState:
    x: np.ndarray
    b: np.ndarray
    t: int = 0
    params: SolverParams | None = None
    # certified lower bound on lambda_min(b); valid because per-sample
    # Hessians are PSD, so lambda_min can shrink at most by the (1 - 1/t)
    # averaging factor per step
    lmin_bound: float = 0.0


def initial_state(d: int) -> NewtonState:
    """x_0 = 0 and B_0 = I; B_0 only affects the bootstrap step."""
    return NewtonState(x=np.zeros(d), b=np.eye(d), t=0, lmin_bound=1.0)


def hessian_avg_update(b_prev: np.ndarray, h_new: np.ndarray, t: int) -> np.ndarray:
    """Running Hessian mean: B_t = (1 - 1/t) B_{t-1} + H_{t-1} / t."""
    if t < 1:
        raise InvalidStep(f"hessian average update needs t >= 1, got {t}")
    return (1.0 - 1.0 / t) * b_prev + h_new / t


def _ensure_lmin(state: NewtonState, delta: float) -> None:
    """Refresh the exact smallest eigenvalue when the certified bound decays."""
    if state.lmin_bound < 10.0 * delta:
        state.lmin_bound = float(np.linalg.eigvalsh(state.b)[0])


def _exact_step_truncated(b: np.ndarray, rhs: np.ndarray, t: int, delta: float) -> np.ndarray:
    """Exact-mode solve with eigenvalues below the sampling-noise floor truncated.

    A t-sample Hessian average only resolves eigenvalues down to roughly
    lambda_max * sqrt(d/t); inverting anything smaller launches transients of
    size 1/lambda that the inverse-stepsize-weighted covariance never
    forgets.  Truncating at the floor caps every update at
    phi_t ||g|| sqrt(t/d) / lambda_max = O(t^{1/2 - phi}), uniformly bounded
    for phi > 1/2, and the floor decays to ``delta``, so the solve becomes a
    plain Newton solve for any fixed positive-definite limit.
    """
    d = b.shape[0]
    w, v = np.linalg.eigh(b)
    noise_floor = float(w[-1]) * min(1.0, math.sqrt(d / max(t, 1)))
    cut = max(delta, noise_floor)
    inv = np.where(w >= cut, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    return (v * inv) @ (v.T @ rhs)


def _refresh_params(b_solve: np.ndarray, cfg: NewtonConfig, rng: RngStream) -> SolverParams:
    # while the ridge-repaired average is still near rank-deficient (t < d,
    # roughly) the expected projection can be numerically singular; drop the
    # momentum for such steps and retry acceleration at the next refresh
    try:
        if cfg.sketch.kind == "kaczmarz":
            mn = mu_nu_exact_kaczmarz(b_solve)
        else:
            mn = mu_nu_mc(b_solve, cfg.sketch, cfg.mc_samples_mu_nu, rng)
    except DegenerateSketchDistribution:
        return SolverParams(0.5, 0.0, 1.0, cfg.tau)
    return params_from_mu_nu(mn, cfg.tau, cfg.gamma_mode)


def newton_step(
    state: NewtonState,
    sample: Sample,
    schedule: StepSchedule,
    cfg: NewtonConfig,
    rng: RngStream,
) -> NewtonState:
    """Advance one step in place; returns the same state object."""
    g, h = grad_hess(cfg.model, state.x, sample)
    try:
        if cfg.tau is None:
            z = _exact_step_truncated(state.b, -g, state.t, cfg.ridge_delta)
        else:
            _ensure_lmin(state, cfg.ridge_delta)
            if state.lmin_bound < cfg.ridge_delta:
                b_solve = state.b + (cfg.ridge_delta - state.lmin_bound) * np.eye(state.b.shape[0])
            else:
                b_solve = state.b
            if state.params is None or state.t % cfg.refresh_every == 0:
                state.params = _refresh_params(b_solve, cfg, rng)
            z = solve(b_solve, -g, state.params, cfg.sketch, rng).z
    except NumericalBlowup as exc:
        raise NumericalBlowup(exc.step, outer_step=state.t) from exc
    state.x = state.x + schedule.at(state.t) * z
    state.b = hessian_avg_update(state.b, h, state.t + 1)
    state.lmin_bound *= 1.0 - 1.0 / (state.t + 1)
    state.t += 1
    return state


@dataclass(frozen=True)
class TrajectoryCheckpoint:
    t: int
    x: np.ndarray
    phi: float
    sigma_hat: np.ndarray


@dataclass
class TrajectoryResult:
    checkpoints: list[TrajectoryCheckpoint]
    terminal_x: np.ndarray
    cov: RunningCovariance
    params_last: SolverParams | None = None


def _draw_block(model: ModelKind, gt: GroundTruth, n: int, rng: RngStream):
    """Pre-draw n samples; the kernel replicates this exact call sequence."""
    d = gt.x_star.shape[0]
    xs = rng.gen.standard_normal((n, d)) @ gt.chol().T
    if model == "linear":
        noise = np.sqrt(gt.sigma2) * rng.gen.standard_normal(n)
        responses = xs @ gt.x_star + noise
    else:
        responses = np.where(rng.gen.random(n) < sigmoid(xs @ gt.x_star), 1.0, -1.0)
    return xs, responses


def run_trajectory(
    model: ModelKind,
    gt: GroundTruth,
    cfg: NewtonConfig,
    schedule: StepSchedule,
    steps: int,
    checkpoints: list[int],
    rng_data: RngStream,
    rng_solver: RngStream,
) -> TrajectoryResult:
    """One full replication: deterministic given the two streams.

    Every iterate x_1..x_steps is pushed into the covariance accumulator with
    weight 1/phi of the stepsize that produced it; at each requested
    checkpoint t the iterate, stepsize, and materialized estimate are stored.
    """
    if steps < 1:
        raise InvalidConfig("steps must be >= 1")
    wanted = sorted(set(int(t) for t in checkpoints))
    if wanted and (wanted[0] < 1 or wanted[-1] > steps):
        raise InvalidConfig("checkpoints must lie in [1, steps]")
    d = gt.x_star.shape[0]
    state = initial_state(d)
    cov = RunningCovariance(d)
    out: list[TrajectoryCheckpoint] = []
    next_idx = 0
    done = 0
    while done < steps:
        n = min(DATA_BLOCK, steps - done)
        xs, responses = _draw_block(model, gt, n, rng_data)
        for i in range(n):
            phi_prev = schedule.at(state.t)
            newton_step(state, Sample(xs[i], float(responses[i])), schedule, cfg, rng_solver)
            cov.push(state.x, phi_prev)
            if next_idx < len(wanted) and state.t == wanted[next_idx]:
                out.append(
                    TrajectoryCheckpoint(
                        t=state.t,
                        x=state.x.copy(),
                        phi=schedule.at(state.t),
                        sigma_hat=cov.materialize(),
                    )
                )
                next_idx += 1
        done += n
    return TrajectoryResult(
        checkpoints=out, terminal_x=state.x.copy(), cov=cov, params_last=state.params
    )
