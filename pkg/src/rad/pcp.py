"""Principal Component Pursuit by the inexact augmented Lagrange multiplier method.

Solves::

    minimize ||L||_* + lam * ||S||_1   subject to   L + S = M

Each iteration shrinks singular values for ``L``, shrinks entries for
``S``, takes a dual ascent step on ``Y`` and grows the penalty ``mu``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverDivergedError
from .linalg import _svt, as_data_matrix, soft_threshold

logger = logging.getLogger(__name__)


def default_lambda(n_rows: int, d: int) -> float:
    """Standard PCP sparsity weight ``1 / sqrt(max(n_rows, d))``."""
    if n_rows < 1 or d < 1:
        raise ValueError(f"dimensions must be positive, got ({n_rows}, {d})")
    return 1.0 / np.sqrt(max(n_rows, d))


@dataclass(frozen=True)
class PcpConfig:
    """Solver settings. ``None`` means derive from the data.

    lam: sparsity weight; default ``1/sqrt(max(n_rows, d))``.
    mu0: initial penalty; default ``1.25 / sigma_1(M)``.
    mu_max: penalty cap; default ``1e7 * mu0``.
    """

    lam: float | None = None
    tol: float = 1e-7
    max_iter: int = 10000
    mu0: float | None = None
    rho: float = 1.5
    mu_max: float | None = None

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must be in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.mu0 is not None and not self.mu0 > 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.rho < 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if self.mu_max is not None:
            if not self.mu_max > 0:
                raise ValueError(f"mu_max must be positive, got {self.mu_max}")
            if self.mu0 is not None and self.mu_max < self.mu0:
                raise ValueError("mu_max must be >= mu0")

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "mu0": self.mu0,
            "rho": self.rho,
            "mu_max": self.mu_max,
        }


@dataclass
class PcpResult:
    L: np.ndarray
    S: np.ndarray
    iterations: int
    residual_history: list[float]
    converged: bool
    lam: float
    mu_history: list[float] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.L))


def pcp_decompose(M, cfg: PcpConfig | None = None) -> PcpResult:
    """Split ``M`` into low-rank ``L`` and sparse ``S``.

    Stops once ``||M - L - S||_F <= cfg.tol * ||M||_F``. Hitting
    ``max_iter`` first is not an error: the last iterate is returned with
    ``converged=False``.

    Raises:
        SolverDivergedError: an iterate became non-finite.
    """
    cfg = cfg or PcpConfig()
    M = as_data_matrix(M)
    n_rows, d = M.shape
    lam = cfg.lam if cfg.lam is not None else default_lambda(n_rows, d)

    norm_fro = float(np.linalg.norm(M))
    if norm_fro == 0.0:
        zeros = np.zeros_like(M)
        return PcpResult(zeros, zeros.copy(), 1, [0.0], True, lam, [])

    sigma1 = float(np.linalg.norm(M, 2))
    mu = cfg.mu0 if cfg.mu0 is not None else 1.25 / sigma1
    mu_max = cfg.mu_max if cfg.mu_max is not None else 1e7 * mu
    Y = M / max(sigma1, float(np.abs(M).max()) / lam)
    S = np.zeros_like(M)
    stop = cfg.tol * norm_fro

    residuals: list[float] = []
    mus: list[float] = []
    converged = False
    for _ in range(cfg.max_iter):
        mus.append(mu)
        L, _ = _svt(M - S + Y / mu, 1.0 / mu)
        S = soft_threshold(M - L + Y / mu, lam / mu)
        R = M - L - S
        res = float(np.linalg.norm(R))
        if not np.isfinite(res):
            raise SolverDivergedError("solver diverged")
        residuals.append(res)
        if res <= stop:
            converged = True
            break
        Y += mu * R
        mu = min(cfg.rho * mu, mu_max)

    if not converged:
        logger.warning(
            "PCP did not converge in %d iterations (residual %.3e, target %.3e)",
            cfg.max_iter, residuals[-1], stop,
        )
    return PcpResult(L, S, len(residuals), residuals, converged, lam, mus)


def objective(L: np.ndarray, S: np.ndarray, lam: float) -> float:
    """``||L||_* + lam * ||S||_1``."""
    return float(np.linalg.svd(L, compute_uv=False).sum() + lam * np.abs(S).sum())
