"""Ground-truth quantities for verifying the solver and the inference pipeline.

Provides the expected marginal operator K*, the sketch-inflated sandwich
Gamma* = E[(I - K~) Omega* (I - K~)^T], the limiting covariance Sigma* solving

    [(I - K*) - zeta I] Sigma* + Sigma* [(I - K*) - zeta I] = Gamma*,

the unaccelerated counterparts built from plain projection products, and the
scalar spectral recursion p_tau(z) that controls ||K|| along eigendirections
of the expected projection.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .accel_params import SolverParams, mu_nu_exact_kaczmarz, mu_nu_mc, params_from_mu_nu
from .errors import BoundViolated, EnumTooLarge, InvalidConfig, OracleUnavailable, SingularLyapunov
from .linalg import check_symmetric, kron_lyap_solve, sym
from .models import GroundTruth, population_quantities
from .nasketch import TransitionBlock, expected_K_from_z, transition_block
from .newton import NewtonConfig, StepSchedule
from .rng import RngStream
from .sketching import (
    SketchSpec,
    draw_sketch,
    expected_projection_kaczmarz,
    expected_projection_mc,
    projection,
)

ENUM_BUDGET = 1_000_000
MC_DEFAULT = 100_000


def _kaczmarz_projections(b: np.ndarray) -> list[np.ndarray]:
    b = check_symmetric(b)
    d = b.shape[0]
    out = []
    for i in range(d):
        col = b[:, i]
        n2 = float(col @ col)
        out.append(np.outer(col, col) / n2 if n2 > 0.0 else np.zeros((d, d)))
    return out


def gamma_star(
    b_star: np.ndarray,
    omega_star: np.ndarray,
    params: SolverParams,
    spec: SketchSpec,
    method: Literal["exact", "mc"] = "exact",
    m: int = MC_DEFAULT,
    rng: RngStream | None = None,
    enum_budget: int = ENUM_BUDGET,
) -> np.ndarray:
    """E[(I - K~) Omega (I - K~)^T] over the tau-step sketch sequence.

    ``exact`` enumerates all d^tau coordinate-sketch sequences (Kaczmarz only,
    within ``enum_budget``); ``mc`` averages over m simulated sequences.
    """
    omega_star = check_symmetric(omega_star)
    if params.tau is None:
        raise InvalidConfig("gamma_star is defined for sketched solves; exact mode has Gamma = Omega")
    d = omega_star.shape[0]
    tau = params.tau
    if method == "exact":
        if spec.kind != "kaczmarz":
            raise InvalidConfig("exact enumeration requires kaczmarz sketching")
        if d**tau > enum_budget:
            raise EnumTooLarge(f"d^tau = {d**tau} exceeds the enumeration budget {enum_budget}")
        blocks = [transition_block(params, zt) for zt in _kaczmarz_projections(b_star)]
        eye = np.eye(d)
        total = np.zeros((d, d))

        def descend(depth: int, acc: TransitionBlock) -> None:
            nonlocal total
            if depth == tau:
                ik = eye - acc.marginal()
                total += ik @ omega_star @ ik.T
                return
            for blk in blocks:
                descend(depth + 1, blk @ acc)

        descend(0, TransitionBlock.identity(d))
        return sym(total / d**tau)

    if method != "mc":
        raise InvalidConfig(f"gamma_star: unknown method {method!r}")
    if rng is None:
        raise InvalidConfig("monte-carlo gamma_star needs an rng")
    eye = np.eye(d)
    total = np.zeros((d, d))
    for _ in range(m):
        acc = TransitionBlock.identity(d)
        for _ in range(tau):
            zt = projection(b_star, draw_sketch(spec, d, rng))
            acc = transition_block(params, zt) @ acc
        ik = eye - acc.marginal()
        total += ik @ omega_star @ ik.T
    return sym(total / m)


def unaccelerated_gamma(
    b_star: np.ndarray,
    omega_star: np.ndarray,
    tau: int,
    enum_budget: int = ENUM_BUDGET,
) -> np.ndarray:
    """Same sandwich with the momentum-free operator prod_j (I - Z~_j), Kaczmarz exact."""
    omega_star = check_symmetric(omega_star)
    d = omega_star.shape[0]
    if d**tau > enum_budget:
        raise EnumTooLarge(f"d^tau = {d**tau} exceeds the enumeration budget {enum_budget}")
    eye = np.eye(d)
    factors = [eye - zt for zt in _kaczmarz_projections(b_star)]
    total = np.zeros((d, d))
    for seq in itertools.product(factors, repeat=tau):
        acc = eye
        for f in seq:
            acc = f @ acc
        ik = eye - acc
        total += ik @ omega_star @ ik.T
    return sym(total / d**tau)


def _solve_lyapunov(k_star: np.ndarray, gamma: np.ndarray, zeta: float) -> np.ndarray:
    d = k_star.shape[0]
    operator = sym(np.eye(d) - k_star) - zeta * np.eye(d)
    w = np.linalg.eigvalsh(operator)
    if w[0] + w[0] <= 0.0:
        raise SingularLyapunov(
            f"(I - K*) - zeta I has eigenvalue-pair sums <= 0 (lambda_min = {w[0]:.3e})"
        )
    return kron_lyap_solve(operator, gamma)


@dataclass(frozen=True)
class LimitingCovariance:
    """K*, Gamma*, Omega*, Sigma* and the stepsize shift zeta for one configuration."""

    k_star: np.ndarray
    gamma_star: np.ndarray
    omega_star: np.ndarray
    sigma_star: np.ndarray
    zeta: float
    mu_star: float | None = None
    nu_star: float | None = None
    params: SolverParams | None = None
    gamma_method: str = "exact"
    munu_method: str = "exact"
    # tau * (1 - sqrt(mu/nu))^(tau-2): the operator-norm budget of the solve
    tau_diagnostic: float | None = None

    def lyapunov_residual(self) -> float:
        d = self.k_star.shape[0]
        operator = sym(np.eye(d) - self.k_star) - self.zeta * np.eye(d)
        res = operator @ self.sigma_star + self.sigma_star @ operator - self.gamma_star
        return float(np.abs(res).max())


def limiting_covariance(
    gt: GroundTruth,
    cfg: NewtonConfig,
    schedule: StepSchedule,
    mc_samples: int = MC_DEFAULT,
    enum_budget: int = ENUM_BUDGET,
    oracle_seed: int = 9_999_991,
) -> LimitingCovariance:
    """Assemble the limiting covariance for one experiment configuration.

    Kaczmarz sketching uses exact enumeration for (mu, nu), K*, and (within
    budget) Gamma*; Gaussian sketching falls back to Monte-Carlo with a
    dedicated stream.  The expected operator K* is symmetric in exact
    arithmetic (a matrix function of the expected projection), so Monte-Carlo
    estimates are symmetrized before the Lyapunov solve.
    """
    try:
        b_star, omega_star = population_quantities(cfg.model, gt)
    except Exception as exc:
        raise OracleUnavailable(f"population quantities unavailable: {exc}") from exc
    zeta = 1.0 / (2.0 * schedule.c_phi) if schedule.phi == 1.0 else 0.0

    if cfg.tau is None:
        d = b_star.shape[0]
        k_star = np.zeros((d, d))
        gamma = omega_star.copy()
        sigma = _solve_lyapunov(k_star, gamma, zeta)
        return LimitingCovariance(
            k_star=k_star, gamma_star=gamma, omega_star=omega_star, sigma_star=sigma,
            zeta=zeta, gamma_method="closed-form", munu_method="exact-solve",
        )

    spec = cfg.sketch
    rng = RngStream(oracle_seed)
    if spec.kind == "kaczmarz":
        mn = mu_nu_exact_kaczmarz(b_star)
        munu_method = "exact"
    else:
        mn = mu_nu_mc(b_star, spec, mc_samples, rng.derive(1))
        munu_method = f"mc({mc_samples})"
    params = params_from_mu_nu(mn, cfg.tau, cfg.gamma_mode)

    if spec.kind == "kaczmarz":
        z = expected_projection_kaczmarz(b_star)
    else:
        z = expected_projection_mc(b_star, spec, mc_samples, rng.derive(2))
    k_star = sym(expected_K_from_z(z, params))

    d = b_star.shape[0]
    if spec.kind == "kaczmarz" and d**cfg.tau <= enum_budget:
        gamma = gamma_star(b_star, omega_star, params, spec, method="exact", enum_budget=enum_budget)
        gamma_method = "exact-enum"
    else:
        gamma = gamma_star(
            b_star, omega_star, params, spec, method="mc", m=mc_samples, rng=rng.derive(3)
        )
        gamma_method = f"mc({mc_samples})"

    sigma = _solve_lyapunov(k_star, gamma, zeta)
    rho = 1.0 - math.sqrt(mn.mu / mn.nu)
    diagnostic = cfg.tau * rho ** (cfg.tau - 2) if cfg.tau >= 2 else float(cfg.tau)
    return LimitingCovariance(
        k_star=k_star, gamma_star=gamma, omega_star=omega_star, sigma_star=sigma,
        zeta=zeta, mu_star=mn.mu, nu_star=mn.nu, params=params,
        gamma_method=gamma_method, munu_method=munu_method, tau_diagnostic=diagnostic,
    )


def unaccelerated_covariance(
    gt: GroundTruth,
    cfg: NewtonConfig,
    schedule: StepSchedule,
    enum_budget: int = ENUM_BUDGET,
) -> np.ndarray:
    """Limiting covariance of the momentum-free sketched method, Kaczmarz exact.

    Built from C* = (I - Z)^tau and the projection-product sandwich; when the
    accelerated configuration has gamma* = 1 the two covariances coincide.
    """
    if cfg.tau is None or cfg.sketch is None or cfg.sketch.kind != "kaczmarz":
        raise InvalidConfig("unaccelerated covariance requires kaczmarz sketching with finite tau")
    b_star, omega_star = population_quantities(cfg.model, gt)
    zeta = 1.0 / (2.0 * schedule.c_phi) if schedule.phi == 1.0 else 0.0
    z = expected_projection_kaczmarz(b_star)
    d = z.shape[0]
    c_star = np.linalg.matrix_power(np.eye(d) - z, cfg.tau)
    gamma = unaccelerated_gamma(b_star, omega_star, cfg.tau, enum_budget)
    return _solve_lyapunov(sym(c_star), gamma, zeta)


def g_matrix(z: float, params: SolverParams) -> np.ndarray:
    """The 2x2 eigendirection transition matrix G(z)."""
    a, bt, g = params.alpha, params.beta, params.gamma
    base = np.array([[1.0 - a, a], [(1.0 - a) * (1.0 - bt), a + bt - a * bt]])
    sketch_part = np.array([[1.0 - a, a], [(1.0 - a) * g, a * g]])
    return base - z * sketch_part


def p_tau(z: float, params: SolverParams, tau: int) -> float:
    """e_1^T G(z)^tau 1 via the trace/determinant second-order recursion.

    Tr(z) = 1 + beta - alpha*beta - z (1 - alpha + alpha*gamma) and
    D(z) = (1 - alpha) beta (1 - z); initialization p_0 = 1, p_1 = 1 - z.
    """
    if tau < 0:
        raise InvalidConfig("tau must be >= 0")
    a, bt, g = params.alpha, params.beta, params.gamma
    trace = 1.0 + bt - a * bt - z * (1.0 - a + a * g)
    det = (1.0 - a) * bt * (1.0 - z)
    p_prev, p_cur = 1.0, 1.0 - z
    if tau == 0:
        return p_prev
    for _ in range(tau - 1):
        p_prev, p_cur = p_cur, trace * p_cur - det * p_prev
    return p_cur


def _spectral_radius(trace: float, det: float) -> float:
    disc = trace * trace - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        return max(abs(trace + root), abs(trace - root)) / 2.0
    return math.sqrt(det)


@dataclass(frozen=True)
class SpectralReport:
    p_max: float
    p_bound: float
    rho_max: float
    rho_bound: float

    @property
    def p_slack(self) -> float:
        return self.p_bound - self.p_max

    @property
    def rho_slack(self) -> float:
        return self.rho_bound - self.rho_max


def spectral_bound_check(
    params: SolverParams,
    mu: float,
    nu: float,
    tau: int,
    grid: np.ndarray,
    rel_slack: float = 1e-10,
) -> SpectralReport:
    """Verify sup |p_tau| <= 2 tau rho^(tau-2) and rho(G(z)) <= rho on a grid.

    ``rho = 1 - sqrt(mu/nu)``.  The p bound applies for tau >= 2 (smaller tau
    is below the recursion's reach and trivially bounded); raises
    BoundViolated with the witnessing z otherwise.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.min() < mu - 1e-12 or grid.max() > 1.0 + 1e-12:
        raise InvalidConfig("grid must lie within [mu, 1]")
    rho_bound = 1.0 - math.sqrt(mu / nu)
    p_bound = 2.0 * tau * rho_bound ** (tau - 2) if tau >= 2 else 2.0
    a, bt, g = params.alpha, params.beta, params.gamma
    p_max = 0.0
    rho_max = 0.0
    for z in grid:
        trace = 1.0 + bt - a * bt - z * (1.0 - a + a * g)
        det = (1.0 - a) * bt * (1.0 - z)
        rho = _spectral_radius(trace, det)
        if rho > rho_bound + rel_slack * (1.0 + rho_bound):
            raise BoundViolated(f"spectral radius {rho} exceeds {rho_bound}", float(z))
        p_val = abs(p_tau(float(z), params, tau))
        if tau >= 2 and p_val > p_bound + rel_slack * (1.0 + p_bound):
            raise BoundViolated(f"|p_tau| = {p_val} exceeds {p_bound}", float(z))
        p_max = max(p_max, p_val)
        rho_max = max(rho_max, rho)
    return SpectralReport(p_max=p_max, p_bound=p_bound, rho_max=rho_max, rho_bound=rho_bound)
