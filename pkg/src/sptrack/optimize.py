"""Bounded derivative-free maximization in log-parameter space.

Kernel hyperparameters are positive and span orders of magnitude, so the
simplex search runs on log-transformed coordinates with out-of-bounds points
rejected via an infinite penalty.  Everything is deterministic given the
start points.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .exceptions import OptimizationError


def simplex_maximize(
    objective: Callable[[np.ndarray], float],
    starts: Sequence,
    lower,
    upper,
    *,
    xatol: float = 2e-4,
    fatol: float = 1e-8,
    maxfev: int = 250,
) -> tuple[np.ndarray, float]:
    """Maximize ``objective`` over box-bounded positive parameters.

    ``objective`` maps a natural-scale parameter vector to a scalar (larger is
    better; non-finite values are treated as rejections).  The first start is
    always polished by a Nelder-Mead run; each further start launches its own
    run only when its raw value beats everything found so far (it is usually
    a cold fallback that the warm start has already surpassed).  The best
    point seen anywhere wins, so the result is never worse than any start.

    Deterministic given the start list.  Returns (parameters, value).
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower <= 0) or np.any(upper <= lower):
        raise ValueError("bounds must satisfy 0 < lower < upper")
    log_lo = np.log(lower)
    log_hi = np.log(upper)

    def negated(z: np.ndarray) -> float:
        if np.any(z < log_lo) or np.any(z > log_hi):
            return np.inf
        value = objective(np.exp(z))
        return -value if np.isfinite(value) else np.inf

    def initial_simplex(z0: np.ndarray) -> np.ndarray:
        # fixed log-space steps, directed away from the nearer bound; scipy's
        # default simplex collapses when a coordinate of z0 is zero
        simplex = np.tile(z0, (z0.size + 1, 1))
        for i in range(z0.size):
            step = 0.25 if z0[i] + 0.25 <= log_hi[i] else -0.25
            simplex[i + 1, i] += step
        return simplex

    candidates: list[tuple[float, np.ndarray]] = []
    best_so_far = np.inf
    for i, start in enumerate(starts):
        z0 = np.clip(np.log(np.asarray(start, dtype=float)), log_lo, log_hi)
        f0 = negated(z0)
        candidates.append((f0, z0))
        if i > 0 and f0 >= best_so_far:
            continue
        result = minimize(
            negated,
            z0,
            method="Nelder-Mead",
            options={
                "xatol": xatol,
                "fatol": fatol,
                "maxfev": maxfev,
                "initial_simplex": initial_simplex(z0),
            },
        )
        z_run = np.clip(result.x, log_lo, log_hi)
        f_run = negated(z_run)
        candidates.append((f_run, z_run))
        best_so_far = min(best_so_far, f_run, f0)

    finite = [(f, z) for f, z in candidates if np.isfinite(f)]
    if not finite:
        raise OptimizationError("no finite objective value at any candidate point")
    f_best, z_best = min(finite, key=lambda item: item[0])
    return np.exp(z_best), -f_best
