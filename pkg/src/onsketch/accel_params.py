"""Problem parameters (mu, nu) and the acceleration triple (alpha, beta, gamma).

``mu`` is the smallest eigenvalue of the expected projection Z and ``nu`` the
largest eigenvalue of Z^{-1/2} E[Z~ Z^{-1} Z~] Z^{-1/2}; they always satisfy
1 <= nu <= 1/mu, and the solver parameters follow as

    alpha = 1 / (1 + gamma * nu),  beta = 1 - sqrt(mu / nu),  gamma = 1 / sqrt(mu * nu).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateSketchDistribution, InvalidConfig
from .linalg import check_symmetric, sym
from .rng import RngStream
from .sketching import SketchSpec, draw_sketch, projection

MU_FLOOR = 1e-8

GammaMode = Literal["estimated", "unit"]


@dataclass(frozen=True)
class MuNu:
    mu: float
    nu: float

    def __post_init__(self):
        if not (0.0 < self.mu <= 1.0):
            raise InvalidConfig(f"mu must be in (0, 1], got {self.mu}")
        if not (1.0 <= self.nu <= 1.0 / self.mu + 1e-12):
            raise InvalidConfig(f"nu must be in [1, 1/mu], got {self.nu}")


@dataclass(frozen=True)
class SolverParams:
    """Acceleration triple plus the sketch-step budget.

    ``tau=None`` means the Newton system is solved exactly (no sketching);
    the triple is ignored in that mode.
    """

    alpha: float
    beta: float
    gamma: float
    tau: int | None

    def __post_init__(self):
        if self.tau is not None and self.tau < 0:
            raise InvalidConfig("tau must be >= 0 or None for an exact solve")


def _clamped(mu: float, nu: float, mu_floor: float) -> MuNu:
    mu = float(min(max(mu, mu_floor), 1.0))
    nu = float(min(max(nu, 1.0), 1.0 / mu))
    return MuNu(mu, nu)


def _checked_z_eigh(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(z)
    scale = max(float(w[-1]), 0.0)
    if scale <= 0.0 or w[0] <= 1e-12 * scale:
        raise DegenerateSketchDistribution("expected projection is singular")
    return w, v


def _nu_from(w: np.ndarray, v: np.ndarray, a: np.ndarray) -> float:
    # lambda_max(Z^{-1/2} A Z^{-1/2}) via the congruent form in Z's eigenbasis
    inv_sqrt = 1.0 / np.sqrt(w)
    m = (v.T @ a @ v) * np.outer(inv_sqrt, inv_sqrt)
    return float(np.linalg.eigvalsh(m)[-1])


def mu_nu_exact_kaczmarz(b: np.ndarray, mu_floor: float = MU_FLOOR) -> MuNu:
    """Exact (mu, nu) under coordinate sketching, by d-term enumeration.

    Both Z and A = E[Z~ Z^{-1} Z~] reduce to weighted sums of the rank-one
    projections (B e_i)(B e_i)^T / ||B e_i||^2, so no sampling is needed.
    """
    b = check_symmetric(b)
    d = b.shape[0]
    norms2 = np.einsum("ij,ij->j", b, b)
    if norms2.min() <= 0.0:
        raise DegenerateSketchDistribution("B has a zero column")
    z = sym((b / norms2) @ b.T) / d
    w, v = _checked_z_eigh(z)
    z_inv = (v / w) @ v.T
    quad = np.einsum("ij,ij->j", b, z_inv @ b)
    a = sym((b * (quad / norms2**2)) @ b.T) / d
    return _clamped(float(w[0]), _nu_from(w, v, a), mu_floor)


def mu_nu_mc(
    b: np.ndarray,
    spec: SketchSpec,
    m: int,
    rng: RngStream,
    mu_floor: float = MU_FLOOR,
) -> MuNu:
    """Monte-Carlo (mu, nu): Z and A estimated from the same m sketch draws."""
    if m < 2:
        raise InvalidConfig("mu_nu_mc: m must be >= 2")
    b = check_symmetric(b)
    d = b.shape[0]
    projections = [projection(b, draw_sketch(spec, d, rng)) for _ in range(m)]
    z = sym(sum(projections) / m)
    w, v = _checked_z_eigh(z)
    z_inv = (v / w) @ v.T
    a = sym(sum(p @ z_inv @ p for p in projections) / m)
    return _clamped(float(w[0]), _nu_from(w, v, a), mu_floor)


def params_from_mu_nu(mn: MuNu, tau: int | None, mode: GammaMode = "estimated") -> SolverParams:
    """Map (mu, nu) to (alpha, beta, gamma).

    ``estimated`` applies the three formulas directly.  ``unit`` is the
    degenerate choice mu * nu = gamma = 1: nu is replaced by 1/mu, giving
    gamma = 1, beta = 1 - mu, alpha = mu / (1 + mu); momentum is retained but
    carries no provable rate gain.
    """
    if mode == "unit":
        nu = 1.0 / mn.mu
        gamma = 1.0
    elif mode == "estimated":
        nu = mn.nu
        gamma = 1.0 / np.sqrt(mn.mu * mn.nu)
    else:
        raise InvalidConfig(f"gamma_mode: unknown mode {mode!r}")
    beta = 1.0 - np.sqrt(mn.mu / nu)
    alpha = 1.0 / (1.0 + gamma * nu)
    return SolverParams(alpha=float(alpha), beta=float(beta), gamma=float(gamma), tau=tau)
