"""Regression losses, synthetic data generation, and population quantities.

Linear model: response = features @ x_star + noise, squared loss.
Logistic model: label in {-1, +1} with P(label | features) given by the
logit of features @ x_star, log loss.  Covariates are Gaussian with one of
three covariance designs (identity / Toeplitz / equi-correlation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateModel, InvalidConfig
from .linalg import check_symmetric, cholesky, sym
from .rng import RngStream

ModelKind = Literal["linear", "logistic"]
DesignKind = Literal["identity", "toeplitz", "equicorr"]

# dedicated seed for population Monte-Carlo oracles; echoed into run metadata
DEFAULT_POP_SEED = 1_000_003
DEFAULT_POP_SAMPLES = 200_000


@dataclass(frozen=True)
class DesignSpec:
    kind: DesignKind
    d: int
    r: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "toeplitz", "equicorr"):
            raise InvalidConfig(f"design: unknown kind {self.kind!r}")
        if self.d < 1:
            raise InvalidConfig("design: d must be >= 1")
        if not (0.0 <= self.r < 1.0):
            raise InvalidConfig(f"design: r must be in [0, 1), got {self.r}")


def make_design(spec: DesignSpec) -> np.ndarray:
    """Covariate covariance matrix for the given design."""
    d, r = spec.d, spec.r
    if spec.kind == "identity":
        return np.eye(d)
    if spec.kind == "toeplitz":
        idx = np.arange(d)
        return r ** np.abs(idx[:, None] - idx[None, :])
    return (1.0 - r) * np.eye(d) + r * np.ones((d, d))


@dataclass
class GroundTruth:
    """True parameter, covariate covariance, and (linear) noise variance."""

    x_star: np.ndarray
    sigma_a: np.ndarray
    sigma2: float = 1.0
    _chol: np.ndarray | None = field(default=None, repr=False)

    def chol(self) -> np.ndarray:
        if self._chol is None:
            self._chol = cholesky(self.sigma_a)
        return self._chol


def default_ground_truth(design: DesignSpec, sigma2: float = 1.0) -> GroundTruth:
    """Ground truth with parameter entries linearly spaced on [0, 1]."""
    if sigma2 <= 0.0:
        raise InvalidConfig("sigma2 must be positive")
    x_star = np.linspace(0.0, 1.0, design.d)
    return GroundTruth(x_star=x_star, sigma_a=make_design(design), sigma2=sigma2)


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    response: float


def sigmoid(u):
    """Numerically stable logistic function, elementwise."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out if out.ndim else float(out)


def draw_sample(model: ModelKind, gt: GroundTruth, rng: RngStream) -> Sample:
    """One observation from the synthetic model."""
    length = gt.chol()
    xi = length @ rng.gen.standard_normal(gt.x_star.shape[0])
    mean = float(xi @ gt.x_star)
    if model == "linear":
        response = mean + np.sqrt(gt.sigma2) * rng.gen.standard_normal()
    elif model == "logistic":
        response = 1.0 if rng.gen.random() < sigmoid(mean) else -1.0
    else:
        raise InvalidConfig(f"model: unknown kind {model!r}")
    return Sample(features=xi, response=float(response))


def loss(model: ModelKind, x: np.ndarray, sample: Sample) -> float:
    """Per-sample loss value (used by finite-difference checks)."""
    inner = float(sample.features @ x)
    if model == "linear":
        return 0.5 * (sample.response - inner) ** 2
    u = sample.response * inner
    # softplus(-u) without overflow
    return float(np.log1p(np.exp(-abs(u))) + max(-u, 0.0))


def grad_hess(model: ModelKind, x: np.ndarray, sample: Sample) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample gradient and Hessian of the loss at x."""
    xi = sample.features
    inner = float(xi @ x)
    if model == "linear":
        g = -(sample.response - inner) * xi
        return g, np.outer(xi, xi)
    u = sample.response * inner
    s_pos = sigmoid(u)
    s_neg = sigmoid(-u)
    g = -sample.response * s_neg * xi
    return g, (s_pos * s_neg) * np.outer(xi, xi)


def population_quantities(
    model: ModelKind,
    gt: GroundTruth,
    m_pop: int = DEFAULT_POP_SAMPLES,
    pop_seed: int = DEFAULT_POP_SEED,
) -> tuple[np.ndarray, np.ndarray]:
    """Population Hessian B* and sandwich covariance at the true parameter.

    Linear regression is closed form: B* = Sigma_a and the sandwich collapses
    to sigma2 * Sigma_a^{-1}.  Logistic regression is estimated by Monte-Carlo
    at x_star with a dedicated fixed seed.
    """
    sigma_a = check_symmetric(gt.sigma_a)
    d = sigma_a.shape[0]
    if model == "linear":
        b_star = sigma_a.copy()
        omega = gt.sigma2 * _inv_pd(b_star)
        return b_star, omega
    if model != "logistic":
        raise InvalidConfig(f"model: unknown kind {model!r}")

    rng = RngStream(pop_seed)
    length = gt.chol()
    b_acc = np.zeros((d, d))
    score_acc = np.zeros((d, d))
    chunk = 20_000
    remaining = m_pop
    while remaining > 0:
        n = min(chunk, remaining)
        xs = rng.gen.standard_normal((n, d)) @ length.T
        a = xs @ gt.x_star
        labels = np.where(rng.gen.random(n) < sigmoid(a), 1.0, -1.0)
        w_hess = sigmoid(a) * sigmoid(-a)
        b_acc += xs.T @ (w_hess[:, None] * xs)
        s = sigmoid(-labels * a)  # |gradient| weight; labels are +-1 so g g^T = s^2 xi xi^T
        score_acc += xs.T @ ((s**2)[:, None] * xs)
        remaining -= n
    b_star = sym(b_acc / m_pop)
    score = sym(score_acc / m_pop)
    b_inv = _inv_pd(b_star)
    return b_star, sym(b_inv @ score @ b_inv)


def _inv_pd(m: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(m)
    if w[0] <= 1e-12 * max(abs(w[-1]), 1e-300):
        raise DegenerateModel("population Hessian is singular")
    return sym(np.linalg.inv(m))
