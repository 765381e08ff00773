"""Independent reference computations used by the tests."""

import numpy as np

from rad.median import median_objective


def grid_oracle(points, levels=40, half_width=8):
    """Brute-force minimiser of the 2-D median objective.

    Evaluates a grid over the bounding box, then repeatedly re-centres a
    finer grid on the best cell. The objective is convex, so zooming in on
    the best grid point cannot lose the minimum.
    """
    P = np.asarray(points, dtype=float)
    lo, hi = P.min(axis=0), P.max(axis=0)
    center = (lo + hi) / 2
    step = max(float((hi - lo).max()), 1e-12) / (2 * half_width)
    k = np.arange(-half_width, half_width + 1)
    best = center
    for _ in range(levels):
        gx, gy = np.meshgrid(center[0] + k * step, center[1] + k * step)
        cand = np.column_stack([gx.ravel(), gy.ravel()])
        f = np.linalg.norm(cand[:, None, :] - P[None, :, :], axis=2).sum(axis=1)
        best = cand[np.argmin(f)]
        center = best
        step /= 4
    return best, median_objective(P, best)
