"""Sketching distributions and realized projection matrices.

A draw ``S`` (d x s) induces the projection ``Z = B S (S^T B^2 S)^+ S^T B``
onto the B-weighted range of S; the solver's contraction is governed by the
expectation of these projections over the sketch distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidConfig, InvalidMatrix
from .linalg import check_symmetric, pseudo_inverse, sym
from .rng import RngStream

SketchKind = Literal["kaczmarz", "gaussian"]


@dataclass(frozen=True)
class SketchSpec:
    """Sketch distribution: uniform coordinate vectors or i.i.d. Gaussian columns."""

    kind: SketchKind = "kaczmarz"
    columns: int = 1

    def __post_init__(self):
        if self.kind not in ("kaczmarz", "gaussian"):
            raise InvalidConfig(f"sketch: unknown kind {self.kind!r}")
        if self.columns < 1:
            raise InvalidConfig("sketch: columns must be >= 1")
        if self.kind == "kaczmarz" and self.columns != 1:
            raise InvalidConfig("sketch: kaczmarz requires columns == 1")


def draw_sketch(spec: SketchSpec, d: int, rng: RngStream) -> np.ndarray:
    """One realized sketch matrix of shape (d, columns)."""
    if spec.kind == "kaczmarz":
        s = np.zeros((d, 1))
        s[rng.gen.integers(0, d), 0] = 1.0
        return s
    return rng.gen.standard_normal((d, spec.columns))


def projection(b: np.ndarray, s: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Realized projection B S (S^T B^2 S)^+ S^T B for one sketch draw."""
    b = check_symmetric(b)
    s = np.asarray(s, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if not np.isfinite(s).all():
        raise InvalidMatrix("sketch matrix has non-finite entries")
    p = b @ s
    gram_inv = pseudo_inverse(sym(p.T @ p), rel_tol)
    return sym(p @ gram_inv @ p.T)


def expected_projection_kaczmarz(b: np.ndarray) -> np.ndarray:
    """Exact expected projection under uniform coordinate sketching.

    Averages the d rank-one projections (B e_i)(B e_i)^T / ||B e_i||^2; a zero
    column contributes the zero matrix, matching the pseudoinverse convention.
    """
    b = check_symmetric(b)
    norms2 = np.einsum("ij,ij->j", b, b)
    weights = np.where(norms2 > 0.0, 1.0 / np.where(norms2 == 0.0, 1.0, norms2), 0.0)
    return sym((b * weights) @ b.T) / b.shape[0]


def expected_projection_mc(
    b: np.ndarray, spec: SketchSpec, m: int, rng: RngStream
) -> np.ndarray:
    """Monte-Carlo estimate of the expected projection from m independent draws."""
    if m < 1:
        raise InvalidConfig("expected_projection_mc: m must be >= 1")
    b = check_symmetric(b)
    d = b.shape[0]
    acc = np.zeros((d, d))
    for _ in range(m):
        acc += projection(b, draw_sketch(spec, d, rng))
    return sym(acc / m)
