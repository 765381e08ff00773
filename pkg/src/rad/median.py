"""Geometric median by Weiszfeld iteration.

The plain Weiszfeld map divides by ``||z_i - y||`` and breaks down when an
iterate lands on a data point. Near a data point we switch to the
Vardi-Zhang modified step, which is well defined there and keeps the
objective non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class MedianConfig:
    """Stopping rule for :func:`geometric_median`.

    ``tol`` and ``anchor_eps`` are absolute distances; ``None`` scales them
    to the data (``1e-9`` and ``1e-12`` of the mean distance to the
    coordinate-wise median).
    """

    tol: float | None = None
    max_iter: int = 1000
    anchor_eps: float | None = None

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.anchor_eps is not None and not self.anchor_eps > 0:
            raise ValueError(f"anchor_eps must be positive, got {self.anchor_eps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")

    def to_dict(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter, "anchor_eps": self.anchor_eps}


@dataclass
class MedianResult:
    point: np.ndarray
    iterations: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def median_objective(points: np.ndarray, y: np.ndarray) -> float:
    """Sum of Euclidean distances from ``y`` to every point."""
    return float(np.linalg.norm(np.asarray(points) - y, axis=1).sum())


def geometric_median(points, cfg: MedianConfig | None = None) -> MedianResult:
    """Point minimising the sum of Euclidean distances to ``points`` (n x d).

    Starts from the coordinate-wise median. With two points every point on
    the segment is optimal; the midpoint is returned.
    """
    cfg = cfg or MedianConfig()
    Z = np.asarray(points, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise DataError(f"points must be a non-empty n x d array, got shape {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise DataError("points contain non-finite values")

    n = Z.shape[0]
    if n == 1:
        y = Z[0].copy()
        return MedianResult(y, 0, True, [0.0])
    if n == 2:
        y = 0.5 * (Z[0] + Z[1])
        return MedianResult(y, 0, True, [median_objective(Z, y)])

    y = np.median(Z, axis=0)
    dist = np.linalg.norm(Z - y, axis=1)
    scale = float(dist.mean())
    history = [float(dist.sum())]
    if scale == 0.0:
        return MedianResult(y, 0, True, history)
    tol = cfg.tol if cfg.tol is not None else 1e-9 * scale
    eps = cfg.anchor_eps if cfg.anchor_eps is not None else 1e-12 * scale

    for it in range(1, cfg.max_iter + 1):
        y_new = _weiszfeld_step(Z, y, dist, eps)
        step = float(np.linalg.norm(y_new - y))
        y = y_new
        dist = np.linalg.norm(Z - y, axis=1)
        history.append(float(dist.sum()))
        if step <= tol:
            return MedianResult(y, it, True, history)
    return MedianResult(y, cfg.max_iter, False, history)


def _weiszfeld_step(Z: np.ndarray, y: np.ndarray, dist: np.ndarray, eps: float) -> np.ndarray:
    near = dist < eps
    far = ~near
    if not far.any():
        return y
    w = 1.0 / dist[far]
    T = (w @ Z[far]) / w.sum()
    eta = int(near.sum())
    if eta == 0:
        return T
    # Vardi-Zhang: y is (numerically) a data point of multiplicity eta
    R = w @ (Z[far] - y)
    r = float(np.linalg.norm(R))
    if r == 0.0:
        return y
    gamma = min(1.0, eta / r)
    return (1.0 - gamma) * T + gamma * y
