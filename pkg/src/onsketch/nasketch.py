"""Accelerated sketch-and-project solver and its transition operators.

The solver approximately solves ``B dx = rhs`` by tau sketched projection
steps with Nesterov momentum.  Writing e_j = z_j - dx and f_j = v_j - dx, one
step maps (e_j, f_j) through the asymmetric 2x2-block operator

    C = [[(1-a)(I-Z),            a(I-Z)          ],
         [(1-a)(1-b)I - (1-a)gZ, (a+b-ab)I - agZ ]]

with Z the realized projection of that step.  The product of the tau blocks,
contracted to (1,1)+(1,2), is the marginal operator K with
z_tau - dx = K (z_0 - dx); everything here is exact linear algebra, so the
operators double as verification oracles for the iterative solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel_params import SolverParams
from .errors import InvalidConfig, NumericalBlowup
from .linalg import check_symmetric, cholesky, pseudo_inverse, sym
from .rng import RngStream
from .sketching import SketchSpec, draw_sketch, expected_projection_kaczmarz


@dataclass(frozen=True)
class TransitionRecord:
    """Realized projections of one solve, enough to rebuild its operator."""

    projections: tuple[np.ndarray, ...]
    params: SolverParams
    dim: int


@dataclass(frozen=True)
class SolveResult:
    z: np.ndarray
    record: TransitionRecord | None = None
    iterates: list[np.ndarray] | None = None


def solve(
    b: np.ndarray,
    rhs: np.ndarray,
    params: SolverParams,
    spec: SketchSpec | None = None,
    rng: RngStream | None = None,
    *,
    record: bool = False,
    keep_iterates: bool = False,
) -> SolveResult:
    """Run the accelerated solver on ``B z = rhs``.

    ``params.tau=None`` performs an exact Cholesky solve (B must be positive
    definite) and returns an empty record.  Otherwise exactly ``tau`` sketch
    steps are taken from ``z_0 = v_0 = 0``; with ``record=True`` the realized
    projections are returned, and ``keep_iterates=True`` additionally stores
    z_1..z_tau.
    """
    b = check_symmetric(b)
    rhs = np.asarray(rhs, dtype=float)
    d = b.shape[0]
    if rhs.shape != (d,):
        raise InvalidConfig(f"rhs shape {rhs.shape} does not match matrix dimension {d}")
    if not np.isfinite(rhs).all():
        raise InvalidConfig("rhs has non-finite entries")

    if params.tau is None:
        length = cholesky(b)
        z = np.linalg.solve(length.T, np.linalg.solve(length, rhs))
        rec = TransitionRecord((), params, d) if record else None
        return SolveResult(z=z, record=rec, iterates=[z.copy()] if keep_iterates else None)

    if spec is None or rng is None:
        raise InvalidConfig("sketched solve requires a sketch spec and rng")
    if spec.kind == "kaczmarz":
        return _solve_kaczmarz(b, rhs, params, rng, record, keep_iterates)
    return _solve_general(b, rhs, params, spec, rng, record, keep_iterates)


def _solve_kaczmarz(b, rhs, params, rng, record, keep_iterates):
    d = b.shape[0]
    tau = params.tau
    # one block draw per solve keeps the stream layout independent of options
    idx = rng.gen.integers(0, d, size=tau) if tau > 0 else np.empty(0, dtype=np.int64)
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    z = np.zeros(d)
    v = np.zeros(d)
    projections: list[np.ndarray] = []
    iterates: list[np.ndarray] = []
    for j in range(tau):
        y = alpha * v + (1.0 - alpha) * z
        col = b[:, idx[j]]
        n2 = col @ col
        if n2 > 0.0:
            omega = col * ((col @ y - rhs[idx[j]]) / n2)
        else:
            omega = np.zeros(d)
        z = y - omega
        v = beta * v + (1.0 - beta) * y - gamma * omega
        if record:
            projections.append(np.outer(col, col) / n2 if n2 > 0.0 else np.zeros((d, d)))
        if keep_iterates:
            iterates.append(z.copy())
    if not (np.isfinite(z).all() and np.isfinite(v).all()):
        _locate_blowup_kaczmarz(b, rhs, params, idx)
    rec = TransitionRecord(tuple(projections), params, d) if record else None
    return SolveResult(z=z, record=rec, iterates=iterates if keep_iterates else None)


def _locate_blowup_kaczmarz(b, rhs, params, idx):
    # replay the recorded draws with per-step checks to report the first bad step
    d = b.shape[0]
    z = np.zeros(d)
    v = np.zeros(d)
    for j, i in enumerate(idx):
        y = params.alpha * v + (1.0 - params.alpha) * z
        col = b[:, i]
        n2 = col @ col
        omega = col * ((col @ y - rhs[i]) / n2) if n2 > 0.0 else np.zeros(d)
        z = y - omega
        v = params.beta * v + (1.0 - params.beta) * y - params.gamma * omega
        if not (np.isfinite(z).all() and np.isfinite(v).all()):
            raise NumericalBlowup(j)
    raise NumericalBlowup(len(idx) - 1)


def _solve_general(b, rhs, params, spec, rng, record, keep_iterates):
    d = b.shape[0]
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    z = np.zeros(d)
    v = np.zeros(d)
    projections: list[np.ndarray] = []
    iterates: list[np.ndarray] = []
    for j in range(params.tau):
        y = alpha * v + (1.0 - alpha) * z
        s = draw_sketch(spec, d, rng)
        p = b @ s
        gram_inv = _gram_pinv(p)
        omega = p @ (gram_inv @ (p.T @ y - s.T @ rhs))
        z = y - omega
        v = beta * v + (1.0 - beta) * y - gamma * omega
        if record:
            projections.append(sym(p @ gram_inv @ p.T))
        if keep_iterates:
            iterates.append(z.copy())
        if not (np.isfinite(z).all() and np.isfinite(v).all()):
            raise NumericalBlowup(j)
    rec = TransitionRecord(tuple(projections), params, d) if record else None
    return SolveResult(z=z, record=rec, iterates=iterates if keep_iterates else None)


def _gram_pinv(p: np.ndarray) -> np.ndarray:
    return pseudo_inverse(sym(p.T @ p))


@dataclass(frozen=True)
class TransitionBlock:
    """A 2d x 2d operator stored as four explicit d x d blocks."""

    b11: np.ndarray
    b12: np.ndarray
    b21: np.ndarray
    b22: np.ndarray

    @classmethod
    def identity(cls, d: int) -> "TransitionBlock":
        eye = np.eye(d)
        zero = np.zeros((d, d))
        return cls(eye.copy(), zero.copy(), zero.copy(), eye.copy())

    def __matmul__(self, other: "TransitionBlock") -> "TransitionBlock":
        return TransitionBlock(
            self.b11 @ other.b11 + self.b12 @ other.b21,
            self.b11 @ other.b12 + self.b12 @ other.b22,
            self.b21 @ other.b11 + self.b22 @ other.b21,
            self.b21 @ other.b12 + self.b22 @ other.b22,
        )

    def marginal(self) -> np.ndarray:
        """(I 0) C (I; I): the block driving the state marginal."""
        return self.b11 + self.b12

    def as_matrix(self) -> np.ndarray:
        top = np.hstack([self.b11, self.b12])
        bottom = np.hstack([self.b21, self.b22])
        return np.vstack([top, bottom])


def transition_block(params: SolverParams, ztilde: np.ndarray) -> TransitionBlock:
    """One-step transition operator for a given (realized or expected) projection."""
    ztilde = np.asarray(ztilde, dtype=float)
    d = ztilde.shape[0]
    eye = np.eye(d)
    a, bt, g = params.alpha, params.beta, params.gamma
    i_minus = eye - ztilde
    return TransitionBlock(
        b11=(1.0 - a) * i_minus,
        b12=a * i_minus,
        b21=(1.0 - a) * (1.0 - bt) * eye - (1.0 - a) * g * ztilde,
        b22=(a + bt - a * bt) * eye - a * g * ztilde,
    )


def transition_K(record: TransitionRecord) -> np.ndarray:
    """Marginal operator K of a recorded solve; the empty record gives I."""
    acc = TransitionBlock.identity(record.dim)
    for zt in record.projections:
        acc = transition_block(record.params, zt) @ acc
    return acc.marginal()


def expected_K_from_z(z: np.ndarray, params: SolverParams) -> np.ndarray:
    """E[K] for i.i.d. sketches with expected projection ``z``.

    Independence across the tau steps turns the expectation of the block
    product into the tau-th power of the single-step block built from z.
    """
    if params.tau is None:
        raise InvalidConfig("expected operator is defined for sketched solves only")
    m = transition_block(params, np.asarray(z, dtype=float))
    acc = TransitionBlock.identity(z.shape[0])
    for _ in range(params.tau):
        acc = m @ acc
    return acc.marginal()


def expected_K_kaczmarz(b: np.ndarray, params: SolverParams) -> np.ndarray:
    """Exact E[K] under coordinate sketching at matrix ``b``."""
    return expected_K_from_z(expected_projection_kaczmarz(b), params)
