"""Compiled trajectory kernel for replicated experiments.

This mirrors :func:`onsketch.newton.run_trajectory` step for step, with
identical stream consumption (block-drawn data, per-step sketch draws) and
identical update formulas, but runs the whole replication inside one
nopython region.
Supported configurations: linear/logistic models, Kaczmarz or single-column
Gaussian sketching, or the exact solve.  Anything else should use the plain
driver.

Instead of exceptions the kernel reports status codes: 0 = ok, 1 = non-finite
iterate (wrapped as NumericalBlowup).  A degenerate expected projection
during warm-up falls back to unaccelerated parameters, matching the driver.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .accel_params import MU_FLOOR
from .newton import DATA_BLOCK, RIDGE_DELTA

MODEL_LINEAR, MODEL_LOGISTIC = 0, 1
SKETCH_KACZMARZ, SKETCH_GAUSSIAN, SKETCH_EXACT = 0, 1, 2

STATUS_OK, STATUS_BLOWUP, STATUS_DEGENERATE = 0, 1, 2


@njit(cache=True, fastmath=False)
def _sigmoid(u):
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    eu = math.exp(u)
    return eu / (1.0 + eu)


@njit(cache=True, fastmath=False)
def _truncated_solve(b, rhs, t, delta):
    # eigenvalues below the sampling-noise floor lambda_max * sqrt(d/t) are
    # truncated, not inverted; mirrors the plain driver's exact-mode repair
    d = b.shape[0]
    w, v = np.linalg.eigh(b)
    noise_floor = max(w[d - 1], 0.0) * min(1.0, math.sqrt(d / max(t, 1)))
    cut = max(delta, noise_floor)
    out = np.zeros(d)
    for k in range(d):
        if w[k] >= cut:
            proj = 0.0
            for i in range(d):
                proj += v[i, k] * rhs[i]
            coeff = proj / w[k]
            for i in range(d):
                out[i] += coeff * v[i, k]
    return out


@njit(cache=True, fastmath=False)
def _munu_kaczmarz(b):
    """Exact (mu, nu) under coordinate sketching; returns (status, mu, nu)."""
    d = b.shape[0]
    norms2 = np.empty(d)
    for j in range(d):
        acc = 0.0
        for i in range(d):
            acc += b[i, j] * b[i, j]
        norms2[j] = acc
        if acc <= 0.0:
            return STATUS_DEGENERATE, 0.0, 0.0
    scaled = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            scaled[i, j] = b[i, j] / norms2[j]
    z = (scaled @ b.T) / d
    z = 0.5 * (z + z.T)
    w, v = np.linalg.eigh(z)
    if w[0] <= 1e-12 * max(w[d - 1], 1e-300):
        return STATUS_DEGENERATE, 0.0, 0.0
    z_inv = (v / w) @ v.T
    zb = z_inv @ b
    weighted = np.empty((d, d))
    for j in range(d):
        quad = 0.0
        for i in range(d):
            quad += b[i, j] * zb[i, j]
        c = quad / (norms2[j] * norms2[j])
        for i in range(d):
            weighted[i, j] = b[i, j] * c
    a = (weighted @ b.T) / d
    a = 0.5 * (a + a.T)
    m = v.T @ a @ v
    for i in range(d):
        for j in range(d):
            m[i, j] /= math.sqrt(w[i]) * math.sqrt(w[j])
    nu = np.linalg.eigvalsh(0.5 * (m + m.T))[d - 1]
    return STATUS_OK, w[0], nu


@njit(cache=True, fastmath=False)
def _munu_gaussian_mc(b, m_draws, gen):
    """Monte-Carlo (mu, nu) for single-column Gaussian sketches."""
    d = b.shape[0]
    phat = np.zeros((m_draws, d))
    z = np.zeros((d, d))
    for k in range(m_draws):
        svec = gen.standard_normal(d)
        p = b @ svec
        n2 = 0.0
        for i in range(d):
            n2 += p[i] * p[i]
        if n2 > 0.0:
            inv_norm = 1.0 / math.sqrt(n2)
            for i in range(d):
                phat[k, i] = p[i] * inv_norm
            for i in range(d):
                for j in range(d):
                    z[i, j] += phat[k, i] * phat[k, j]
    z /= m_draws
    z = 0.5 * (z + z.T)
    w, v = np.linalg.eigh(z)
    if w[0] <= 1e-12 * max(w[d - 1], 1e-300):
        return STATUS_DEGENERATE, 0.0, 0.0
    z_inv = (v / w) @ v.T
    a = np.zeros((d, d))
    for k in range(m_draws):
        quad = 0.0
        for i in range(d):
            row = 0.0
            for j in range(d):
                row += z_inv[i, j] * phat[k, j]
            quad += phat[k, i] * row
        for i in range(d):
            for j in range(d):
                a[i, j] += quad * phat[k, i] * phat[k, j]
    a /= m_draws
    a = 0.5 * (a + a.T)
    m = v.T @ a @ v
    for i in range(d):
        for j in range(d):
            m[i, j] /= math.sqrt(w[i]) * math.sqrt(w[j])
    nu = np.linalg.eigvalsh(0.5 * (m + m.T))[d - 1]
    return STATUS_OK, w[0], nu


@njit(cache=True, fastmath=False)
def trajectory_kernel(
    data_gen,
    solver_gen,
    model_code,
    x_star,
    chol_t,
    sigma2,
    sketch_code,
    tau,
    gamma_unit,
    refresh_every,
    mc_munu,
    ridge_delta,
    mu_floor,
    c_phi,
    phi,
    steps,
    checkpoints,
    data_block,
):
    d = x_star.shape[0]
    x = np.zeros(d)
    b = np.eye(d)
    lmin_bound = 1.0
    alpha = 0.5
    beta = 0.0
    gamma = 1.0
    have_params = False

    cov_outer = np.zeros((d, d))
    cov_wsum = np.zeros(d)
    cov_wtot = 0.0
    cov_sum = np.zeros(d)

    n_cp = checkpoints.shape[0]
    cp_x = np.zeros((n_cp, d))
    cp_phi = np.zeros(n_cp)
    cp_sigma = np.zeros((n_cp, d, d))
    cp_i = 0

    sqrt_sigma = math.sqrt(sigma2)
    t = 0
    done = 0
    g = np.empty(d)
    while done < steps:
        n = min(data_block, steps - done)
        raw = data_gen.standard_normal(size=(n, d))
        xs = raw @ chol_t
        resp = np.empty(n)
        if model_code == MODEL_LINEAR:
            noise = data_gen.standard_normal(n)
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    acc += xs[i, j] * x_star[j]
                resp[i] = acc + sqrt_sigma * noise[i]
        else:
            u = data_gen.random(n)
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    acc += xs[i, j] * x_star[j]
                resp[i] = 1.0 if u[i] < _sigmoid(acc) else -1.0

        for i in range(n):
            xi = xs[i]
            phi_t = c_phi / (t + 1) ** phi
            inner = 0.0
            for j in range(d):
                inner += xi[j] * x[j]
            if model_code == MODEL_LINEAR:
                scale = inner - resp[i]
                hw = 1.0
            else:
                uu = resp[i] * inner
                s_neg = _sigmoid(-uu)
                scale = -resp[i] * s_neg
                hw = _sigmoid(uu) * s_neg
            for j in range(d):
                g[j] = scale * xi[j]

            if sketch_code == SKETCH_EXACT:
                z = _truncated_solve(b, -g, t, ridge_delta)
            else:
                # refresh lambda_min against the certified lower bound
                if lmin_bound < 10.0 * ridge_delta:
                    lmin_bound = np.linalg.eigvalsh(b)[0]
                if lmin_bound < ridge_delta:
                    b_solve = b + (ridge_delta - lmin_bound) * np.eye(d)
                else:
                    b_solve = b
                if (not have_params) or (t % refresh_every == 0):
                    if sketch_code == SKETCH_KACZMARZ:
                        status, mu, nu = _munu_kaczmarz(b_solve)
                    else:
                        status, mu, nu = _munu_gaussian_mc(b_solve, mc_munu, solver_gen)
                    if status != STATUS_OK:
                        # near-singular expected projection (early, repaired
                        # averages): drop momentum for this refresh window
                        alpha, beta, gamma = 0.5, 0.0, 1.0
                    else:
                        mu = min(max(mu, mu_floor), 1.0)
                        nu = min(max(nu, 1.0), 1.0 / mu)
                        if gamma_unit == 1:
                            nu = 1.0 / mu
                            gamma = 1.0
                        else:
                            gamma = 1.0 / math.sqrt(mu * nu)
                        beta = 1.0 - math.sqrt(mu / nu)
                        alpha = 1.0 / (1.0 + gamma * nu)
                    have_params = True
                z = np.zeros(d)
                v = np.zeros(d)
                if sketch_code == SKETCH_KACZMARZ:
                    idx = solver_gen.integers(0, d, size=tau)
                    for jj in range(tau):
                        col_idx = idx[jj]
                        n2 = 0.0
                        for a2 in range(d):
                            n2 += b_solve[a2, col_idx] * b_solve[a2, col_idx]
                        # y = alpha v + (1 - alpha) z, resid = col.y + g[i]
                        resid = g[col_idx]
                        for a2 in range(d):
                            ya = alpha * v[a2] + (1.0 - alpha) * z[a2]
                            resid += b_solve[a2, col_idx] * ya
                        step = resid / n2 if n2 > 0.0 else 0.0
                        for a2 in range(d):
                            ya = alpha * v[a2] + (1.0 - alpha) * z[a2]
                            omega = b_solve[a2, col_idx] * step
                            z[a2] = ya - omega
                            v[a2] = beta * v[a2] + (1.0 - beta) * ya - gamma * omega
                else:
                    for jj in range(tau):
                        svec = solver_gen.standard_normal(d)
                        p = b_solve @ svec
                        n2 = 0.0
                        rhs_dot = 0.0
                        for a2 in range(d):
                            n2 += p[a2] * p[a2]
                            rhs_dot += svec[a2] * g[a2]
                        resid = rhs_dot
                        for a2 in range(d):
                            ya = alpha * v[a2] + (1.0 - alpha) * z[a2]
                            resid += p[a2] * ya
                        step = resid / n2 if n2 > 0.0 else 0.0
                        for a2 in range(d):
                            ya = alpha * v[a2] + (1.0 - alpha) * z[a2]
                            omega = p[a2] * step
                            z[a2] = ya - omega
                            v[a2] = beta * v[a2] + (1.0 - beta) * ya - gamma * omega

            finite = True
            for j in range(d):
                x[j] += phi_t * z[j]
                if not math.isfinite(x[j]):
                    finite = False
            if not finite:
                return (STATUS_BLOWUP, t, x, cp_x, cp_phi, cp_sigma)

            tp1 = t + 1
            keep = 1.0 - 1.0 / tp1
            for a2 in range(d):
                for b2 in range(d):
                    b[a2, b2] = keep * b[a2, b2] + (hw * xi[a2] * xi[b2]) / tp1
            lmin_bound *= keep
            t = tp1

            w = 1.0 / phi_t
            for a2 in range(d):
                cov_wsum[a2] += w * x[a2]
                cov_sum[a2] += x[a2]
                for b2 in range(d):
                    cov_outer[a2, b2] += w * x[a2] * x[b2]
            cov_wtot += w

            if cp_i < n_cp and t == checkpoints[cp_i]:
                inv_t = 1.0 / t
                for a2 in range(d):
                    cp_x[cp_i, a2] = x[a2]
                cp_phi[cp_i] = c_phi / (t + 1) ** phi
                for a2 in range(d):
                    xbar_a = cov_sum[a2] * inv_t
                    for b2 in range(d):
                        xbar_b = cov_sum[b2] * inv_t
                        val = (
                            cov_outer[a2, b2]
                            - cov_wsum[a2] * xbar_b
                            - xbar_a * cov_wsum[b2]
                            + cov_wtot * xbar_a * xbar_b
                        ) * inv_t
                        cp_sigma[cp_i, a2, b2] = val
                for a2 in range(d):
                    for b2 in range(a2 + 1, d):
                        s_val = 0.5 * (cp_sigma[cp_i, a2, b2] + cp_sigma[cp_i, b2, a2])
                        cp_sigma[cp_i, a2, b2] = s_val
                        cp_sigma[cp_i, b2, a2] = s_val
                cp_i += 1
        done += n

    return (STATUS_OK, t, x, cp_x, cp_phi, cp_sigma)


def run_trajectory_fast(
    model: str,
    x_star: np.ndarray,
    chol_a: np.ndarray,
    sigma2: float,
    sketch_kind: str | None,
    tau: int | None,
    gamma_mode: str,
    refresh_every: int,
    mc_samples_mu_nu: int,
    c_phi: float,
    phi: float,
    steps: int,
    checkpoints: np.ndarray,
    data_gen: np.random.Generator,
    solver_gen: np.random.Generator,
    ridge_delta: float = RIDGE_DELTA,
):
    """Numba-backed replication; returns (terminal_x, cp_x, cp_phi, cp_sigma)."""
    from .errors import NumericalBlowup

    model_code = MODEL_LINEAR if model == "linear" else MODEL_LOGISTIC
    if tau is None:
        sketch_code = SKETCH_EXACT
        tau_val = 0
    elif sketch_kind == "kaczmarz":
        sketch_code = SKETCH_KACZMARZ
        tau_val = tau
    else:
        sketch_code = SKETCH_GAUSSIAN
        tau_val = tau
    status, t_bad, x, cp_x, cp_phi, cp_sigma = trajectory_kernel(
        data_gen,
        solver_gen,
        model_code,
        np.ascontiguousarray(x_star, dtype=np.float64),
        np.ascontiguousarray(chol_a.T, dtype=np.float64),
        float(sigma2),
        sketch_code,
        tau_val,
        1 if gamma_mode == "unit" else 0,
        int(refresh_every),
        int(mc_samples_mu_nu),
        float(ridge_delta),
        float(MU_FLOOR),
        float(c_phi),
        float(phi),
        int(steps),
        np.ascontiguousarray(checkpoints, dtype=np.int64),
        int(DATA_BLOCK),
    )
    if status == STATUS_BLOWUP:
        raise NumericalBlowup(step=-1, outer_step=int(t_bad))
    return x, cp_x, cp_phi, cp_sigma


def kernel_supported(model: str, sketch_kind: str | None, columns: int, tau: int | None) -> bool:
    if model not in ("linear", "logistic"):
        return False
    if tau is None:
        return True
    return sketch_kind == "kaczmarz" or (sketch_kind == "gaussian" and columns == 1)
