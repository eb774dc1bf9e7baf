"""Student-t process regression and its moment-matching algebra.

Convention: a t process written as TP(mean, kernel, dof) has ``kernel`` equal
to its covariance function; the finite-dimensional marginals are classic
multivariate t distributions with scale matrix ((dof - 2) / dof) * K.  Sums
and linear maps of t processes are not t processes, so the tracker works with
moment-matched surrogates: equal first/second moments, degrees of freedom
combined by arithmetic mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln

from .exceptions import ConditioningError, GridMismatchError, InsufficientDataError
from .gp import HyperBounds, _as_training, _fallback_start, _mean_at, clip_variance
from .kernels import (
    CovMatrix,
    KernelSpec,
    MeasurementMap,
    build_cov,
    cholesky_factor,
    kernel_eval,
    recover_state_kernel,
    transform_kernel,
)
from .optimize import simplex_maximize


@dataclass(frozen=True)
class StpModel:
    kernel: KernelSpec
    dof: float
    mean_fn: Optional[Callable[[float], float]] = None
    noise_variance: Optional[float] = None
    noise_dof: Optional[float] = None

    def __post_init__(self):
        if not self.dof > 2.0:
            raise ValueError(f"dof must be > 2 for the covariance to exist, got {self.dof}")
        if self.noise_variance is not None and not (
            np.isfinite(self.noise_variance) and self.noise_variance >= 0.0
        ):
            raise ValueError("noise_variance must be finite and >= 0")
        if self.noise_dof is not None and not self.noise_dof > 2.0:
            raise ValueError("noise_dof must be > 2")


@dataclass(frozen=True)
class StpPosterior:
    mean: float
    variance_scale: float
    dof: float
    query_time: float


@dataclass(frozen=True)
class MatchedStp:
    """Moment-matched surrogate: mean values on the kernel grid, kernel, dof."""

    mean: np.ndarray
    kernel: CovMatrix
    dof: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        object.__setattr__(self, "mean", mean)
        if not self.dof > 2.0:
            raise ValueError(f"dof must be > 2, got {self.dof}")
        expected = self.kernel.row_times.size * self.kernel.block_dim
        if mean.size != expected:
            raise ValueError(
                f"mean has {mean.size} entries for a grid of size {expected}"
            )


def stp_predict(
    model: StpModel, train_times, train_values, t_query: float
) -> StpPosterior:
    """Posterior at ``t_query``: the mean matches GP regression exactly; the
    covariance picks up the data-dependent factor
    (dof + r^T J r - 2) / (dof + n - 2), and the dof grows by n.
    """
    times, values = _as_training(train_times, train_values)
    t_query = float(t_query)
    cov = build_cov(model.kernel, times).entries
    if model.noise_variance is not None:
        cov = cov + model.noise_variance * np.eye(times.size)
    chol = cholesky_factor(cov)
    residual = values - _mean_at(model, times)
    alpha = cho_solve((chol, True), residual, check_finite=False)
    k_star = kernel_eval(model.kernel, t_query, times)
    mean = float(_mean_at(model, t_query)) + float(k_star @ alpha)
    w = solve_triangular(chol, k_star, lower=True, check_finite=False)
    prior = float(kernel_eval(model.kernel, t_query, t_query))
    base = clip_variance(prior - float(w @ w), prior)
    beta = float(residual @ alpha)
    n = times.size
    factor = (model.dof + beta - 2.0) / (model.dof + n - 2.0)
    return StpPosterior(
        mean=mean,
        variance_scale=factor * base,
        dof=model.dof + n,
        query_time=t_query,
    )


def log_mvt_density(residual: np.ndarray, cov: np.ndarray, dof: float) -> float:
    """Log density of a multivariate t with covariance ``cov`` and dof > 2.

    The scale matrix is ((dof - 2) / dof) * cov; converges to the Gaussian
    log density as dof grows.
    """
    if not dof > 2.0:
        raise ValueError("dof must be > 2")
    residual = np.asarray(residual, dtype=float).ravel()
    n = residual.size
    c = (dof - 2.0) / dof
    chol = cholesky_factor(cov)
    w = solve_triangular(chol, residual, lower=True, check_finite=False)
    quad = float(w @ w) / c
    logdet_scale = n * math.log(c) + 2.0 * float(np.log(np.diag(chol)).sum())
    return float(
        gammaln(0.5 * (dof + n))
        - gammaln(0.5 * dof)
        - 0.5 * n * math.log(dof * math.pi)
        - 0.5 * logdet_scale
        - 0.5 * (dof + n) * math.log1p(quad / dof)
    )


def stp_log_marginal(model: StpModel, train_times, train_values) -> float:
    times, values = _as_training(train_times, train_values)
    cov = build_cov(model.kernel, times).entries
    if model.noise_variance is not None:
        cov = cov + model.noise_variance * np.eye(times.size)
    return log_mvt_density(values - _mean_at(model, times), cov, model.dof)


def fit_hyperparams_stp(
    train_times,
    train_values,
    dof: float,
    init: KernelSpec,
    bounds: Optional[HyperBounds] = None,
) -> KernelSpec:
    """Maximize the t marginal log density over (variance, length), dof fixed."""
    times, values = _as_training(train_times, train_values)
    if times.size < 2:
        raise InsufficientDataError("hyperparameter fitting needs >= 2 points")
    bounds = bounds or HyperBounds()
    dist2 = (times[:, None] - times[None, :]) ** 2
    eye = np.eye(times.size)
    jitter = init.jitter

    def objective(params: np.ndarray) -> float:
        variance, length = params
        cov = variance * np.exp(-0.5 * dist2 / (length * length))
        cov = cov + jitter * cov.diagonal().max() * eye
        try:
            return log_mvt_density(values, cov, dof)
        except ConditioningError:
            return -np.inf

    lower = (bounds.variance[0], bounds.length_scale[0])
    upper = (bounds.variance[1], bounds.length_scale[1])
    starts = [
        (init.variance, init.length_scale),
        _fallback_start(times, values, bounds),
    ]
    best, _ = simplex_maximize(objective, starts, lower, upper)
    return KernelSpec(float(best[0]), float(best[1]), jitter)


def match_linear(eps_moments: MatchedStp, mmap: MeasurementMap) -> MatchedStp:
    """Surrogate for the measurement-space image: mean and kernel transform,
    degrees of freedom unchanged."""
    kernel = transform_kernel(eps_moments.kernel, mmap)
    n = eps_moments.kernel.row_times.size
    b = eps_moments.kernel.block_dim
    mean = (eps_moments.mean.reshape(n, b) @ mmap.matrix.T).ravel()
    return MatchedStp(mean, kernel, eps_moments.dof)


def match_shift(trajectory: MatchedStp, trend) -> MatchedStp:
    """Surrogate for the trend-removed residual: zero mean, same kernel/dof.

    ``trend`` is the fitted mean being subtracted; the shift leaves the shape
    of the distribution untouched, so only the mean changes.
    """
    return MatchedStp(np.zeros_like(trajectory.mean), trajectory.kernel, trajectory.dof)


def matched_sum_entries(
    k_g: np.ndarray, dof_g: float, k_v: np.ndarray, dof_v: float
) -> tuple[np.ndarray, float]:
    """Kernel and dof of the moment-matched sum of two independent surrogates.

    Equal degrees of freedom collapse to the plain kernel sum; that case is
    taken literally so the collapse is exact in floating point.
    """
    if dof_g == dof_v:
        return k_g + k_v, float(dof_g)
    dof_e = 0.5 * (dof_g + dof_v)
    entries = ((dof_e - 2.0) / dof_e) * (
        dof_g * k_g / (dof_g - 2.0) + dof_v * k_v / (dof_v - 2.0)
    )
    return entries, dof_e


def match_sum(g: MatchedStp, v: MatchedStp) -> MatchedStp:
    """Surrogate for g + v on a shared grid (dof: arithmetic mean)."""
    if (
        not np.array_equal(g.kernel.row_times, v.kernel.row_times)
        or not np.array_equal(g.kernel.col_times, v.kernel.col_times)
        or g.kernel.block_dim != v.kernel.block_dim
    ):
        raise GridMismatchError("summands are not on the same time grid")
    entries, dof_e = matched_sum_entries(
        g.kernel.entries, g.dof, v.kernel.entries, v.dof
    )
    kernel = CovMatrix(
        entries, g.kernel.row_times, g.kernel.col_times, g.kernel.block_dim
    )
    return MatchedStp(g.mean + v.mean, kernel, dof_e)


def recover_state_kernel_stp(
    k_e: CovMatrix,
    k_v: CovMatrix,
    dof_e: float,
    dof_v: float,
    mmap: MeasurementMap,
) -> tuple[CovMatrix, float]:
    """Invert the matched-sum combination, then undo the measurement map.

    Solving the matched-sum kernel formula for the signal component gives
    k_g = ((dof_g - 2) / dof_g) * [(dof_e / (dof_e - 2)) k_e
                                   - (dof_v / (dof_v - 2)) k_v]
    with dof_g = 2 dof_e - dof_v; the pseudoinverse recovery and PSD repair
    then proceed exactly as in the Gaussian case.
    """
    if not (dof_e > 2.0 and dof_v > 2.0):
        raise ValueError("both degrees of freedom must be > 2")
    dof_g = 2.0 * dof_e - dof_v
    if not dof_g > 2.0:
        raise ValueError(
            f"implied signal dof {dof_g} is not > 2; degrees of freedom "
            "are inconsistent"
        )
    combined = ((dof_g - 2.0) / dof_g) * (
        (dof_e / (dof_e - 2.0)) * k_e.entries
        - (dof_v / (dof_v - 2.0)) * k_v.entries
    )
    k_g = CovMatrix(combined, k_e.row_times, k_e.col_times, k_e.block_dim)
    zero = CovMatrix(
        np.zeros_like(combined), k_e.row_times, k_e.col_times, k_e.block_dim
    )
    return recover_state_kernel(k_g, zero, mmap), dof_g
