"""Fast invariant checks wired to the ``onsketch selftest`` subcommand.

Each check is a trimmed-down version of a test-suite invariant: exact
operator identities, estimator equivalences, and degenerate-regime closed
forms.  They run in seconds and catch gross regressions in the field.
"""

from __future__ import annotations

import numpy as np

from .accel_params import MuNu, SolverParams, mu_nu_exact_kaczmarz, params_from_mu_nu
from .inference import RunningCovariance, normal_cdf, normal_quantile
from .linalg import sym
from .models import default_ground_truth, DesignSpec
from .nasketch import expected_K_kaczmarz, solve, transition_K
from .newton import NewtonConfig, StepSchedule
from .oracle import g_matrix, limiting_covariance, p_tau, unaccelerated_covariance
from .rng import RngStream
from .sketching import SketchSpec


def _random_pd(rng: np.random.Generator, d: int) -> np.ndarray:
    m = rng.standard_normal((d, d))
    return sym(m @ m.T + 0.5 * np.eye(d))


def check_representation(n_cases: int = 20) -> tuple[bool, str]:
    """z_tau == (I - K~) dx for recorded sketches."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for case in range(n_cases):
        d = int(rng.integers(2, 7))
        tau = int(rng.integers(1, 6))
        b = _random_pd(rng, d)
        rhs = rng.standard_normal(d)
        mn = mu_nu_exact_kaczmarz(b)
        params = params_from_mu_nu(mn, tau)
        res = solve(b, rhs, params, SketchSpec("kaczmarz"), RngStream(100 + case), record=True)
        dx = np.linalg.solve(b, rhs)
        k = transition_K(res.record)
        err = np.linalg.norm(res.z - (np.eye(d) - k) @ dx) / max(np.linalg.norm(dx), 1e-30)
        worst = max(worst, err)
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_unaccelerated_reduction(n_cases: int = 20) -> tuple[bool, str]:
    """(alpha, beta, gamma) = (0.5, 0, 1) reproduces plain sketch-and-project."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for case in range(n_cases):
        d = int(rng.integers(2, 7))
        tau = int(rng.integers(1, 8))
        b = _random_pd(rng, d)
        rhs = rng.standard_normal(d)
        params = SolverParams(0.5, 0.0, 1.0, tau)
        res = solve(b, rhs, params, SketchSpec("kaczmarz"), RngStream(300 + case))
        # replay the same draws through the unaccelerated recursion
        idx = RngStream(300 + case).gen.integers(0, d, size=tau)
        z = np.zeros(d)
        for i in idx:
            col = b[:, i]
            z = z - col * ((col @ z - rhs[i]) / (col @ col))
        worst = max(worst, float(np.abs(res.z - z).max()))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_online_covariance() -> tuple[bool, str]:
    """Online accumulators match the two-pass weighted covariance."""
    rng = np.random.default_rng(13)
    d, n = 3, 400
    xs = rng.standard_normal((n, d))
    phis = 1.0 / (np.arange(n) + 1.0) ** 0.6
    rc = RunningCovariance(d)
    for x, phi in zip(xs, phis):
        rc.push(x, phi)
    online = rc.materialize()
    xbar = xs.mean(axis=0)
    centered = xs - xbar
    batch = (centered.T * (1.0 / phis)) @ centered / n
    err = np.abs(online - batch).max() / (1.0 + np.abs(batch).max())
    return err <= 1e-9, f"relative deviation {err:.2e}"


def check_degenerate_covariances() -> tuple[bool, str]:
    """Exact-solve and unit-gamma corners of the limiting covariance."""
    gt = default_ground_truth(DesignSpec("identity", 2))
    exact_cfg = NewtonConfig(model="linear", sketch=None, tau=None)
    lim = limiting_covariance(gt, exact_cfg, StepSchedule(1.0, 0.501))
    err1 = np.abs(lim.sigma_star - 0.5 * lim.omega_star).max()
    lim1 = limiting_covariance(gt, exact_cfg, StepSchedule(1.0, 1.0))
    err2 = np.abs(lim1.sigma_star - lim1.omega_star).max()
    sk_cfg = NewtonConfig(model="linear", sketch=SketchSpec("kaczmarz"), tau=2)
    lim2 = limiting_covariance(gt, sk_cfg, StepSchedule(1.0, 0.501))
    unacc = unaccelerated_covariance(gt, sk_cfg, StepSchedule(1.0, 0.501))
    err3 = np.abs(lim2.sigma_star - unacc).max()
    ok = err1 <= 1e-10 and err2 <= 1e-10 and err3 <= 1e-8
    return ok, f"errors {err1:.2e} / {err2:.2e} / {err3:.2e}"


def check_spectral_recursion() -> tuple[bool, str]:
    """Recursion values match direct 2x2 powering."""
    params = params_from_mu_nu(MuNu(0.25, 4.0), 5)
    worst = 0.0
    for z in np.linspace(0.25, 1.0, 41):
        g = g_matrix(float(z), params)
        direct = float(np.linalg.matrix_power(g, 5)[0] @ np.ones(2))
        worst = max(worst, abs(direct - p_tau(float(z), params, 5)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_quantile_roundtrip() -> tuple[bool, str]:
    worst = 0.0
    for p in np.linspace(0.01, 0.99, 25):
        worst = max(worst, abs(normal_cdf(normal_quantile(float(p))) - p))
    return worst <= 1e-8, f"max |cdf(quantile(p)) - p| = {worst:.2e}"


def check_expected_operator_bound() -> tuple[bool, str]:
    """||K|| <= 2 tau (1 - sqrt(mu/nu))^(tau-2) on random instances."""
    rng = np.random.default_rng(17)
    worst = -np.inf
    for _ in range(10):
        d = int(rng.integers(2, 6))
        tau = int(rng.integers(3, 8))
        b = _random_pd(rng, d)
        mn = mu_nu_exact_kaczmarz(b)
        params = params_from_mu_nu(mn, tau)
        k = expected_K_kaczmarz(b, params)
        bound = 2.0 * tau * (1.0 - np.sqrt(mn.mu / mn.nu)) ** (tau - 2)
        worst = max(worst, float(np.linalg.norm(k, 2) - bound))
    return worst <= 1e-10, f"max bound excess {worst:.2e}"


CHECKS = [
    ("operator representation", check_representation),
    ("unaccelerated reduction", check_unaccelerated_reduction),
    ("online covariance equivalence", check_online_covariance),
    ("degenerate limiting covariances", check_degenerate_covariances),
    ("spectral recursion", check_spectral_recursion),
    ("normal quantile round-trip", check_quantile_roundtrip),
    ("expected operator bound", check_expected_operator_bound),
]


def run_selftest(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok = all_ok and ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
