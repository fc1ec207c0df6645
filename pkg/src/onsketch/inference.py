"""Online weighted covariance estimation and confidence intervals.

The estimator keeps four running sums so the weighted sample covariance

    (1/t) sum_i (1/phi_{i-1}) (x_i - xbar_t)(x_i - xbar_t)^T

can be materialized at any time without revisiting past iterates and without
inverting any matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEstimator, InvalidProbability, InvalidStep
from .linalg import sym


class RunningCovariance:
    """Accumulator for the inverse-stepsize-weighted sample covariance."""

    def __init__(self, d: int):
        self.t = 0
        self.weighted_outer = np.zeros((d, d))  # sum x x^T / phi
        self.weighted_sum = np.zeros(d)  # sum x / phi
        self.weight_total = 0.0  # sum 1 / phi
        self.plain_sum = np.zeros(d)  # sum x

    def push(self, x: np.ndarray, phi_prev: float) -> "RunningCovariance":
        """Ingest iterate ``x`` produced with stepsize ``phi_prev``."""
        if not phi_prev > 0.0:
            raise InvalidStep(f"stepsize weight must be positive, got {phi_prev}")
        x = np.asarray(x, dtype=float)
        w = 1.0 / phi_prev
        self.weighted_outer += w * np.outer(x, x)
        self.weighted_sum += w * x
        self.weight_total += w
        self.plain_sum += x
        self.t += 1
        return self

    def materialize(self) -> np.ndarray:
        if self.t == 0:
            raise EmptyEstimator("no iterates pushed yet")
        xbar = self.plain_sum / self.t
        cross = np.outer(self.weighted_sum, xbar)
        out = self.weighted_outer - cross - cross.T + self.weight_total * np.outer(xbar, xbar)
        return sym(out / self.t)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Rational approximation coefficients for the inverse normal CDF (Acklam).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    A rational approximation supplies the initial value; one Halley step
    against the erfc-based CDF polishes it well past 1e-8 absolute accuracy.
    """
    if not (0.0 < p < 1.0) or not math.isfinite(p):
        raise InvalidProbability(f"p must be in (0, 1), got {p}")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    err = normal_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    level: float

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def length(self) -> float:
        return 2.0 * self.half_width


def confidence_interval(
    w: np.ndarray,
    x_t: np.ndarray,
    sigma_hat: np.ndarray,
    phi_t: float,
    q: float,
) -> ConfidenceInterval:
    """Two-sided (1-q) interval for w^T x* centered at w^T x_t.

    The quadratic form is clamped at zero: the estimator is PSD only up to
    floating-point slack.
    """
    if not phi_t > 0.0:
        raise InvalidStep(f"phi_t must be positive, got {phi_t}")
    if not (0.0 < q < 1.0):
        raise InvalidProbability(f"q must be in (0, 1), got {q}")
    w = np.asarray(w, dtype=float)
    quad = max(float(w @ sigma_hat @ w), 0.0)
    z = normal_quantile(1.0 - q / 2.0)
    return ConfidenceInterval(
        center=float(w @ x_t),
        half_width=z * math.sqrt(phi_t * quad),
        level=1.0 - q,
    )
