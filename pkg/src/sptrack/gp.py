"""Gaussian process regression on scalar time inputs.

Covers posterior prediction, the Cholesky-based log marginal likelihood, and
windowed maximum-likelihood hyperparameter fitting.  Noise handling is a
two-way switch: ``noise_variance=None`` inverts the bare kernel matrix
(noise-free regression), a float adds an iid diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import ConditioningError, InsufficientDataError
from .kernels import KernelSpec, build_cov, cholesky_factor, kernel_eval
from .optimize import simplex_maximize

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GpModel:
    kernel: KernelSpec
    mean_fn: Optional[Callable[[float], float]] = None
    noise_variance: Optional[float] = None

    def __post_init__(self):
        if self.noise_variance is not None and not (
            np.isfinite(self.noise_variance) and self.noise_variance >= 0.0
        ):
            raise ValueError("noise_variance must be finite and >= 0")


@dataclass(frozen=True)
class GpPosterior:
    mean: float
    variance: float
    query_time: float


@dataclass(frozen=True)
class HyperBounds:
    """Box bounds for (variance, length_scale) during likelihood search."""

    variance: tuple[float, float] = (1e-6, 1e6)
    length_scale: tuple[float, float] = (1e-2, 1e2)

    def __post_init__(self):
        for lo, hi in (self.variance, self.length_scale):
            if not (0 < lo < hi):
                raise ValueError("bounds must satisfy 0 < lower < upper")


def _as_training(train_times, train_values) -> tuple[np.ndarray, np.ndarray]:
    times = np.asarray(train_times, dtype=float).ravel()
    values = np.asarray(train_values, dtype=float).ravel()
    if times.size == 0:
        raise InsufficientDataError("at least one training point is required")
    if times.size != values.size:
        raise ValueError("training times and values differ in length")
    if np.unique(times).size != times.size:
        raise ConditioningError("training times must be distinct")
    return times, values


def _mean_at(model: GpModel, t) -> np.ndarray:
    if model.mean_fn is None:
        return np.zeros(np.shape(t))
    return np.asarray([float(model.mean_fn(ti)) for ti in np.atleast_1d(t)]).reshape(
        np.shape(t)
    )


def _training_cholesky(model: GpModel, times: np.ndarray) -> np.ndarray:
    cov = build_cov(model.kernel, times).entries
    if model.noise_variance is not None:
        cov = cov + model.noise_variance * np.eye(times.size)
    return cholesky_factor(cov)


def clip_variance(value: float, prior: float) -> float:
    """Zero out tiny negative round-off; anything worse is a real failure."""
    if value >= 0.0:
        return value
    if value >= -1e-10 * max(1.0, prior):
        return 0.0
    raise ConditioningError(f"predicted variance {value} is significantly negative")


def gp_predict(
    model: GpModel, train_times, train_values, t_query: float
) -> GpPosterior:
    """Posterior mean and variance at ``t_query``.

    Mean: m(t*) + k*^T J (y - m); variance: k(t*, t*) - k*^T J k*, where J is
    the inverse of the (optionally noise-augmented) training matrix, applied
    through its Cholesky factor.
    """
    times, values = _as_training(train_times, train_values)
    t_query = float(t_query)
    chol = _training_cholesky(model, times)
    residual = values - _mean_at(model, times)
    alpha = cho_solve((chol, True), residual, check_finite=False)
    k_star = kernel_eval(model.kernel, t_query, times)
    mean = float(_mean_at(model, t_query)) + float(k_star @ alpha)
    w = solve_triangular(chol, k_star, lower=True, check_finite=False)
    prior = float(kernel_eval(model.kernel, t_query, t_query))
    variance = clip_variance(prior - float(w @ w), prior)
    return GpPosterior(mean=mean, variance=variance, query_time=t_query)


def log_mvn_density(residual: np.ndarray, cov: np.ndarray) -> float:
    """log N(residual | 0, cov) via Cholesky."""
    chol = cholesky_factor(cov)
    w = solve_triangular(chol, residual, lower=True, check_finite=False)
    return -0.5 * (
        float(w @ w) + 2.0 * float(np.log(np.diag(chol)).sum()) + residual.size * LOG_2PI
    )


def gp_log_marginal(model: GpModel, train_times, train_values) -> float:
    """Log marginal likelihood of the training data under the model."""
    times, values = _as_training(train_times, train_values)
    cov = build_cov(model.kernel, times).entries
    if model.noise_variance is not None:
        cov = cov + model.noise_variance * np.eye(times.size)
    return log_mvn_density(values - _mean_at(model, times), cov)


def _fallback_start(times: np.ndarray, values: np.ndarray, bounds: HyperBounds):
    span = float(times.max() - times.min())
    variance = float(np.clip(np.var(values), *bounds.variance))
    length = float(np.clip(span / 4.0 if span > 0 else 1.0, *bounds.length_scale))
    return (variance, length)


def fit_hyperparams(
    train_times,
    train_values,
    init: KernelSpec,
    bounds: Optional[HyperBounds] = None,
) -> KernelSpec:
    """Maximize the noise-free log marginal likelihood over (variance, length).

    Deterministic: one simplex run from ``init`` plus one from a moment-based
    fallback start, best point wins (never worse than ``init`` itself).
    """
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
            return log_mvn_density(values, cov)
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


def fit_hyperparams_with_noise(
    train_times,
    train_values,
    init: KernelSpec,
    init_noise: float,
    bounds: Optional[HyperBounds] = None,
    noise_bounds: tuple[float, float] = (1e-8, 1e6),
) -> tuple[KernelSpec, float]:
    """Joint (variance, length, iid noise variance) fit for zero-mean data.

    Used by the direct windowed-GP baseline, which regresses raw measurements
    and therefore has to attribute part of their spread to observation noise.
    """
    times, values = _as_training(train_times, train_values)
    if times.size < 2:
        raise InsufficientDataError("hyperparameter fitting needs >= 2 points")
    bounds = bounds or HyperBounds()
    dist2 = (times[:, None] - times[None, :]) ** 2
    eye = np.eye(times.size)
    jitter = init.jitter

    def objective(params: np.ndarray) -> float:
        variance, length, noise = params
        cov = variance * np.exp(-0.5 * dist2 / (length * length))
        cov = cov + (jitter * cov.diagonal().max() + noise) * eye
        try:
            return log_mvn_density(values, cov)
        except ConditioningError:
            return -np.inf

    lower = (bounds.variance[0], bounds.length_scale[0], noise_bounds[0])
    upper = (bounds.variance[1], bounds.length_scale[1], noise_bounds[1])
    fallback_v, fallback_l = _fallback_start(times, values, bounds)
    starts = [
        (init.variance, init.length_scale, init_noise),
        (fallback_v, fallback_l, max(0.1 * fallback_v, noise_bounds[0])),
    ]
    best, _ = simplex_maximize(objective, starts, lower, upper)
    return KernelSpec(float(best[0]), float(best[1]), jitter), float(best[2])
