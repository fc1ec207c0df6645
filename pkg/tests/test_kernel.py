"""Compiled kernel vs plain driver: identical streams, same trajectories.

Linear + Kaczmarz and exact-solve configurations agree to machine precision.
Logistic and Gaussian-sketch configurations can pick up ulp-level divergence
early (libm vs SIMD exp; eigensolver threshold hover near the warm-up
fallback) that the contraction washes out, so those compare at scaled
tolerances on the late checkpoints.
"""

import numpy as np
import pytest

from onsketch.kernel import kernel_supported, run_trajectory_fast
from onsketch.models import DesignSpec, default_ground_truth
from onsketch.newton import NewtonConfig, StepSchedule, run_trajectory
from onsketch.rng import RngStream
from onsketch.sketching import SketchSpec


def run_both(model, sketch_kind, tau, gamma_mode="estimated", d=4, steps=2500,
             design="identity", r=0.0, seed=123, refresh_every=1, mc=40):
    gt = default_ground_truth(DesignSpec(design, d, r))
    spec = None if tau is None else SketchSpec(sketch_kind)
    cfg = NewtonConfig(
        model=model, sketch=spec, tau=tau, gamma_mode=gamma_mode,
        refresh_every=refresh_every, mc_samples_mu_nu=mc,
    )
    cps = [steps // 2, steps]
    ref = run_trajectory(
        model, gt, cfg, StepSchedule(), steps, cps, RngStream(seed, 0), RngStream(seed, 1)
    )
    fast = run_trajectory_fast(
        model=model, x_star=gt.x_star, chol_a=gt.chol(), sigma2=gt.sigma2,
        sketch_kind=sketch_kind, tau=tau, gamma_mode=gamma_mode,
        refresh_every=refresh_every, mc_samples_mu_nu=mc, c_phi=1.0, phi=0.501,
        steps=steps, checkpoints=np.array(cps, dtype=np.int64),
        data_gen=RngStream(seed, 0).gen, solver_gen=RngStream(seed, 1).gen,
    )
    return ref, fast


def assert_match(ref, fast, tol_x, tol_sigma):
    terminal, cp_x, cp_phi, cp_sigma = fast
    assert np.abs(terminal - ref.terminal_x).max() <= tol_x
    last = ref.checkpoints[-1]
    np.testing.assert_allclose(cp_phi[-1], last.phi, rtol=1e-14)
    assert np.abs(cp_x[-1] - last.x).max() <= tol_x
    scale = 1.0 + np.abs(last.sigma_hat).max()
    assert np.abs(cp_sigma[-1] - last.sigma_hat).max() <= tol_sigma * scale


@pytest.mark.parametrize(
    "model,sketch_kind,tau,gamma_mode,design,r",
    [
        ("linear", "kaczmarz", 5, "estimated", "identity", 0.0),
        ("linear", "kaczmarz", 5, "unit", "toeplitz", 0.4),
        ("linear", "kaczmarz", 10, "estimated", "equicorr", 0.4),
    ],
)
def test_linear_kaczmarz_bitwise_class(model, sketch_kind, tau, gamma_mode, design, r):
    ref, fast = run_both(model, sketch_kind, tau, gamma_mode, design=design, r=r)
    assert_match(ref, fast, tol_x=1e-11, tol_sigma=1e-9)


def test_exact_mode_linear():
    ref, fast = run_both("linear", None, None, steps=5000, d=3)
    assert_match(ref, fast, tol_x=1e-10, tol_sigma=1e-8)


def test_exact_mode_logistic():
    ref, fast = run_both("logistic", None, None, steps=4000, d=3)
    assert_match(ref, fast, tol_x=1e-4, tol_sigma=1e-3)


def test_logistic_kaczmarz():
    ref, fast = run_both("logistic", "kaczmarz", 3, steps=4000)
    assert_match(ref, fast, tol_x=5e-3, tol_sigma=5e-2)


def test_gaussian_sketch_linear():
    ref, fast = run_both("linear", "gaussian", 4, steps=2500)
    assert_match(ref, fast, tol_x=1e-3, tol_sigma=1e-2)


def test_refresh_cadence():
    ref, fast = run_both("linear", "kaczmarz", 5, refresh_every=25)
    assert_match(ref, fast, tol_x=1e-11, tol_sigma=1e-9)


def test_supported_matrix():
    assert kernel_supported("linear", "kaczmarz", 1, 5)
    assert kernel_supported("logistic", "gaussian", 1, 3)
    assert kernel_supported("linear", None, 1, None)
    assert not kernel_supported("linear", "gaussian", 2, 3)
