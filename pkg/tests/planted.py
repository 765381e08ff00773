"""Synthetic low-rank + sparse fixtures with known ground truth."""

import numpy as np


def planted_low_rank(n, d, rank, seed=0):
    """``U @ V.T`` with standard normal factors; returns (L0, orthonormal row basis)."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, rank))
    V = rng.standard_normal((d, rank))
    L0 = U @ V.T
    Q, _ = np.linalg.qr(V)
    return L0, Q


def planted_sparse(shape, fraction, magnitude, seed=0):
    """Uniformly placed entries of value +-magnitude covering ``fraction`` of cells."""
    rng = np.random.default_rng(seed + 1000)
    n_cells = shape[0] * shape[1]
    k = int(round(fraction * n_cells))
    idx = rng.choice(n_cells, size=k, replace=False)
    S0 = np.zeros(n_cells)
    S0[idx] = rng.choice([-1.0, 1.0], size=k) * magnitude
    return S0.reshape(shape)


def planted_pcp_instance(n=200, d=50, rank=2, fraction=0.05, seed=0):
    L0, _ = planted_low_rank(n, d, rank, seed)
    S0 = planted_sparse(L0.shape, fraction, 5 * L0.std(), seed)
    return L0 + S0, L0, S0


def plant_system(n, d, rank, seed, noise=0.0, loc=None, spread=None, basis=None):
    """Rows driven by ``rank`` latent variables around a non-zero operating point.

    Pass ``basis`` to draw fresh rows from an existing system. Returns
    (X, orthonormal d x rank basis of the noise-free rows).
    """
    rng = np.random.default_rng(seed)
    loc = np.array(loc if loc is not None else [20.0] + [0.0] * (rank - 1))
    spread = np.array(spread if spread is not None else [3.0] + [5.0] * (rank - 1))
    if basis is None:
        Q, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    else:
        Q = basis
    latent = rng.normal(loc, spread, size=(n, rank))
    X = latent @ Q.T
    if noise:
        X = X + rng.normal(0.0, noise, size=X.shape)
    return X, Q
