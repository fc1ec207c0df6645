"""Dense symmetric linear algebra for small dimensions.

Vectors are 1-D float64 ``ndarray``s and symmetric matrices are square 2-D
``ndarray``s symmetric to relative tolerance ``SYM_TOL``.  Everything here is
a pure function; nothing mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix, NotPositiveDefinite, SingularLyapunov

SYM_TOL = 1e-12


def check_symmetric(m: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    """Validate that ``m`` is a finite, symmetric square matrix and return it."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise InvalidMatrix("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > tol * scale:
        raise InvalidMatrix("matrix is not symmetric within tolerance")
    return m


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetrize: 0.5 * (m + m^T)."""
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.

    ``eigenvectors`` holds orthonormal eigenvectors in columns, matching the
    ordering of ``eigenvalues``, so ``V @ diag(w) @ V.T`` reconstructs the
    input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eigen(m: np.ndarray) -> SymEigen:
    """Full symmetric eigendecomposition with eigenvalues sorted descending."""
    m = check_symmetric(m)
    w, v = np.linalg.eigh(m)
    return SymEigen(eigenvalues=w[::-1].copy(), eigenvectors=v[:, ::-1].copy())


def pseudo_inverse(m: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with ``|w| <= rel_tol * max |w|`` are treated as exact zeros,
    so rank decisions are relative to the largest eigenvalue.  The zero matrix
    maps to the zero matrix.
    """
    m = check_symmetric(m)
    w, v = np.linalg.eigh(m)
    cutoff = rel_tol * np.abs(w).max() if w.size else 0.0
    inv_w = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    return sym((v * inv_w) @ v.T)


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor L with L @ L.T == m."""
    m = check_symmetric(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc


def kron_lyap_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the Lyapunov equation m @ X + X @ m = rhs for symmetric m, rhs.

    Vectorizing gives ``(I (x) m + m (x) I) vec(X) = vec(rhs)``, a dense
    d^2 x d^2 system solved with partial pivoting.  Requires every pairwise
    eigenvalue sum of ``m`` to be nonzero.
    """
    m = check_symmetric(m)
    rhs = check_symmetric(rhs)
    d = m.shape[0]
    if rhs.shape[0] != d:
        raise InvalidMatrix("m and rhs dimensions differ")
    w = np.linalg.eigvalsh(m)
    pair_sums = np.abs(w[:, None] + w[None, :])
    scale = max(np.abs(w).max(), 1e-300)
    if pair_sums.min() <= 1e-12 * scale:
        raise SingularLyapunov("eigenvalue-pair sum of m is (near-)zero")
    eye = np.eye(d)
    q = np.kron(eye, m) + np.kron(m, eye)
    try:
        x = np.linalg.solve(q, rhs.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise SingularLyapunov("Kronecker sum is singular") from exc
    return sym(x.reshape(d, d))
