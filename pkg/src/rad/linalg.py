"""Dense matrix primitives: SVD, shrinkage operators, bases and projections."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DataError, DegenerateMatrixError, DimensionError

DEFAULT_RANK_TOL = 1e-6

# Absolute floor on sigma_1 below which a matrix counts as zero.
ZERO_FLOOR = 1e-12


class SvdFactors(NamedTuple):
    """Thin SVD ``M = U @ diag(s) @ V.T`` with ``s`` non-increasing."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray


def as_data_matrix(values, name: str = "M") -> np.ndarray:
    """Validate and return ``values`` as a finite 2-D float64 array."""
    M = np.asarray(values, dtype=np.float64)
    if M.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise DataError(f"{name} must have at least one row and one column, got {M.shape}")
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise DataError(f"{name} has a non-finite entry at row {bad[0]}, column {bad[1]}")
    return M


def svd(M: np.ndarray) -> SvdFactors:
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return SvdFactors(U, s, Vt.T)


def soft_threshold(x, tau: float):
    """Elementwise shrinkage ``sign(x) * max(|x| - tau, 0)``.

    Works on scalars and arrays alike; scalars come back as Python floats.
    """
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: the proximal operator of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    return _svt(np.asarray(M, dtype=np.float64), tau)[0]


def _svt(M: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k], s


def numerical_rank(singular_values: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] < ZERO_FLOOR:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def orthonormal_basis(
    L: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL, rank: int | None = None
) -> np.ndarray:
    """Orthonormal basis (d x r, as columns) of the row space of ``L``.

    The rank is the number of singular values above ``rank_tol * sigma_1``,
    unless ``rank`` pins it explicitly.
    """
    if rank_tol <= 0:
        raise ValueError(f"rank_tol must be positive, got {rank_tol}")
    L = np.asarray(L, dtype=np.float64)
    _, s, V = svd(L)
    if s.size == 0 or s[0] < ZERO_FLOOR:
        raise DegenerateMatrixError("degenerate low-rank matrix")
    if rank is None:
        r = numerical_rank(s, rank_tol)
    else:
        if not 1 <= rank <= s.size:
            raise ValueError(f"rank must be in [1, {s.size}], got {rank}")
        r = rank
    return _canonical_signs(np.ascontiguousarray(V[:, :r]))


def _canonical_signs(A: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column made positive, so bases are reproducible.
    idx = np.argmax(np.abs(A), axis=0)
    signs = np.sign(A[idx, np.arange(A.shape[1])])
    signs[signs == 0] = 1.0
    return A * signs


def gram_schmidt(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Modified Gram-Schmidt on the rows of ``vectors``.

    Rows whose remaining norm falls below ``tol`` times their original norm
    are treated as dependent and dropped. Returns the orthonormal set as
    columns of a d x k matrix.
    """
    V = np.asarray(vectors, dtype=np.float64)
    basis: list[np.ndarray] = []
    for v in V:
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        w = v.copy()
        for q in basis:
            w -= (q @ w) * q
        # second pass restores orthogonality lost to cancellation
        for q in basis:
            w -= (q @ w) * q
        nw = np.linalg.norm(w)
        if nw > tol * norm0:
            basis.append(w / nw)
    if not basis:
        return np.zeros((V.shape[1], 0))
    return np.column_stack(basis)


def project(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection ``A (A^T x)`` onto the column span of ``A``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.shape[0],):
        raise DimensionError(f"expected a vector of length {A.shape[0]}, got shape {x.shape}")
    return A @ (A.T @ x)


def project_rows(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != A.shape[0]:
        raise DimensionError(f"expected rows of length {A.shape[0]}, got shape {X.shape}")
    return (X @ A) @ A.T


def subspace_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest angle between a direction of span(A) and the subspace span(B).

    ``A`` and ``B`` must have orthonormal columns. For equal dimensions this
    is the largest principal angle; when ``A`` has more columns than ``B``
    it is pi/2, since span(A) cannot fit inside span(B).
    """
    R = A - B @ (B.T @ A)
    if R.size == 0:
        return 0.0
    sin = min(1.0, float(np.linalg.norm(R, 2)))
    return float(np.arcsin(sin))
