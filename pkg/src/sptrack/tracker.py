"""Two-stage online trajectory tracker.

Each step, per coordinate: (1) fit the sliding-window polynomial trend,
(2) form the fitting errors, (3) learn the residual-process kernel from those
errors by windowed marginal-likelihood maximization, (4/5) compose with the
known colored-noise kernel and recover the state-residual kernel, (6) emit a
continuous-time estimate with uncertainty.

Two implementation notes on stage two.  The likelihood is parameterized
directly in the state-residual kernel with the known noise kernel added on
top, so the subtraction step is algebraically exact and never produces an
indefinite kernel.  And because the window's fitting errors are least-squares
residuals, their covariance is the error-process covariance projected onto
the complement of the polynomial span; the objective therefore scores the
projected errors against the equally projected kernel (a restricted
likelihood), which keeps the variance estimate unbiased by the trend fit.

The regression itself never adds an iid noise diagonal: the modeled noise
covariance is already part of the training matrix (noise-free inversion).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import ConditioningError, ConfigError
from .gp import HyperBounds, log_mvn_density
from .kernels import KernelSpec, cholesky_factor, kernel_eval
from .optimize import simplex_maximize
from .stp import log_mvt_density, matched_sum_entries
from .trend import PolyTrend, Window, eval_trend, fit_trend, fitting_errors

GP = "gp"
STP = "stp"

# Beyond this the t likelihood differs from the Gaussian one by less than the
# optimizer can resolve; using the Gaussian makes the large-dof limit exact.
GAUSSIAN_DOF_CUTOFF = 1e5


@dataclass(frozen=True)
class TrackerConfig:
    noise_kernel: KernelSpec
    window_len: int = 5
    poly_order: int = 2
    residual_model: str = GP
    dof: float = 5.0
    noise_dof: float = 5.0
    kernel_init: KernelSpec = KernelSpec(1.0, 1.0)
    bounds: HyperBounds = field(default_factory=HyperBounds)
    coordinates: int = 2

    def __post_init__(self):
        if self.residual_model not in (GP, STP):
            raise ConfigError(f"unknown residual model {self.residual_model!r}")
        if not 0 <= self.poly_order <= 5:
            raise ConfigError(f"poly_order must be in 0..5, got {self.poly_order}")
        if self.window_len < self.poly_order + 1:
            raise ConfigError(
                f"window_len {self.window_len} is below poly_order + 1 "
                f"= {self.poly_order + 1}"
            )
        if self.coordinates < 1:
            raise ConfigError("coordinates must be >= 1")
        if self.residual_model == STP:
            if not self.dof > 2.0:
                raise ConfigError(f"dof must be > 2 for the StP branch, got {self.dof}")
            if not self.noise_dof > 2.0:
                raise ConfigError(f"noise_dof must be > 2, got {self.noise_dof}")

    @property
    def error_dof(self) -> float:
        """Matched dof of the fitting-error process: mean of signal and noise."""
        return 0.5 * (self.dof + self.noise_dof)


@dataclass(frozen=True)
class CoordResidual:
    """Per-coordinate residual posterior state, enough to query any time."""

    times: np.ndarray
    targets: np.ndarray
    kernel: KernelSpec
    alpha: np.ndarray
    chol: np.ndarray
    stp_factor: Optional[float] = None


class QueryResult(NamedTuple):
    mean: np.ndarray
    variance: np.ndarray
    dof: Optional[float]


@dataclass(frozen=True)
class TrackOutput:
    """Continuous-time trajectory estimate emitted by one tracker step."""

    trend: PolyTrend
    window_end: float
    warmup: bool
    model_kind: str
    residuals: tuple[Optional[CoordResidual], ...]
    prior_variances: tuple[float, ...]
    dof: Optional[float]

    def trend_value(self, t) -> np.ndarray:
        return eval_trend(self.trend, t)

    def residual_mean(self, t: float) -> np.ndarray:
        out = np.zeros(len(self.residuals))
        for j, res in enumerate(self.residuals):
            if res is not None:
                k_vec = kernel_eval(res.kernel, float(t), res.times)
                out[j] = k_vec @ res.alpha
        return out

    def residual_variance(self, t: float) -> np.ndarray:
        out = np.array(self.prior_variances, dtype=float)
        for j, res in enumerate(self.residuals):
            if res is None:
                continue
            k_vec = kernel_eval(res.kernel, float(t), res.times)
            w = solve_triangular(res.chol, k_vec, lower=True, check_finite=False)
            variance = max(res.kernel.variance - float(w @ w), 0.0)
            if res.stp_factor is not None:
                variance *= res.stp_factor
            out[j] = variance
        return out

    def query(self, t: float) -> QueryResult:
        """Estimate at any time t: trend plus residual posterior."""
        mean = self.trend_value(t) + self.residual_mean(t)
        return QueryResult(mean, self.residual_variance(t), self.dof)


def _residual_basis(times: np.ndarray, order: int) -> np.ndarray:
    """Orthonormal basis of the complement of the polynomial span."""
    t_center = 0.5 * (times[0] + times[-1])
    half_span = 0.5 * (times[-1] - times[0])
    tau = (times - t_center) / (half_span if half_span > 0 else 1.0)
    design = np.vander(tau, order + 1, increasing=True)
    q, _ = np.linalg.qr(design, mode="complete")
    return q[:, order + 1 :]


class Tracker:
    """Online tracker instance; owns its window, not thread-shareable."""

    # The residual regression inverts the composed training covariance as-is:
    # no extra iid noise term is ever added beyond the modeled noise kernel.
    noise_free_regression = True

    def __init__(self, config: TrackerConfig):
        self.config = config
        self.reset()

    def reset(self) -> None:
        self._window = Window(self.config.window_len)
        self._specs = [self.config.kernel_init] * self.config.coordinates

    def step(self, time: float, measurement) -> TrackOutput:
        """Consume one measurement, return the updated trajectory estimate."""
        cfg = self.config
        measurement = np.atleast_1d(np.asarray(measurement, dtype=float))
        if measurement.shape != (cfg.coordinates,):
            raise ValueError(
                f"measurement shape {measurement.shape} does not match "
                f"{cfg.coordinates} coordinates"
            )
        if not np.isfinite(measurement).all():
            raise ValueError("measurement contains non-finite values")
        self._window.push(time, measurement)
        n = len(self._window)

        if n < cfg.poly_order + 2:
            order = min(cfg.poly_order, n - 1)
            trend = fit_trend(self._window, order)
            return TrackOutput(
                trend=trend,
                window_end=float(time),
                warmup=True,
                model_kind=cfg.residual_model,
                residuals=(None,) * cfg.coordinates,
                prior_variances=tuple(s.variance for s in self._specs),
                dof=cfg.error_dof if cfg.residual_model == STP else None,
            )

        trend = fit_trend(self._window, cfg.poly_order)
        errors = fitting_errors(self._window, trend)
        times = np.array([e.time for e in errors])
        targets = np.array([e.value for e in errors])

        basis = _residual_basis(times, cfg.poly_order)
        dist2 = (times[:, None] - times[None, :]) ** 2
        noise_cov = kernel_eval(cfg.noise_kernel, times[:, None], times[None, :])

        residuals = []
        for j in range(cfg.coordinates):
            spec = self._learn(times, targets[:, j], basis, dist2, noise_cov, self._specs[j])
            self._specs[j] = spec
            residuals.append(self._assemble(times, targets[:, j], spec, dist2, noise_cov))

        dof_out = cfg.error_dof + n if cfg.residual_model == STP else None
        return TrackOutput(
            trend=trend,
            window_end=float(time),
            warmup=False,
            model_kind=cfg.residual_model,
            residuals=tuple(residuals),
            prior_variances=tuple(s.variance for s in self._specs),
            dof=dof_out,
        )

    # -- stage two internals ------------------------------------------------

    def _error_cov(
        self, signal_cov: np.ndarray, noise_cov: np.ndarray
    ) -> tuple[np.ndarray, float]:
        """Covariance (and dof) of the fitting-error process."""
        cfg = self.config
        if cfg.residual_model == STP:
            return matched_sum_entries(signal_cov, cfg.dof, noise_cov, cfg.noise_dof)
        return signal_cov + noise_cov, np.inf

    def _learn(
        self,
        times: np.ndarray,
        errors: np.ndarray,
        basis: np.ndarray,
        dist2: np.ndarray,
        noise_cov: np.ndarray,
        init: KernelSpec,
    ) -> KernelSpec:
        cfg = self.config
        projected = basis.T @ errors
        eye = np.eye(basis.shape[1])
        jitter = init.jitter
        is_stp = cfg.residual_model == STP

        def objective(params: np.ndarray) -> float:
            variance, length = params
            signal_cov = variance * np.exp(-0.5 * dist2 / (length * length))
            error_cov, error_dof = self._error_cov(signal_cov, noise_cov)
            cov = basis.T @ error_cov @ basis
            cov = cov + jitter * max(error_cov.diagonal().max(), 1.0) * eye
            try:
                if is_stp and error_dof <= GAUSSIAN_DOF_CUTOFF:
                    return log_mvt_density(projected, cov, error_dof)
                return log_mvn_density(projected, cov)
            except ConditioningError:
                return -np.inf

        span = float(times[-1] - times[0])
        fallback = (
            float(np.clip(np.var(errors), *cfg.bounds.variance)),
            float(np.clip(span / 2.0 if span > 0 else 1.0, *cfg.bounds.length_scale)),
        )
        lower = (cfg.bounds.variance[0], cfg.bounds.length_scale[0])
        upper = (cfg.bounds.variance[1], cfg.bounds.length_scale[1])
        starts = [(init.variance, init.length_scale), fallback]
        best, _ = simplex_maximize(objective, starts, lower, upper)
        return KernelSpec(float(best[0]), float(best[1]), jitter)

    def _assemble(
        self,
        times: np.ndarray,
        errors: np.ndarray,
        spec: KernelSpec,
        dist2: np.ndarray,
        noise_cov: np.ndarray,
    ) -> CoordResidual:
        cfg = self.config
        signal_cov = spec.variance * np.exp(
            -0.5 * dist2 / (spec.length_scale * spec.length_scale)
        )
        error_cov, error_dof = self._error_cov(signal_cov, noise_cov)
        error_cov = error_cov + spec.jitter * max(
            error_cov.diagonal().max(), 1.0
        ) * np.eye(times.size)
        chol = cholesky_factor(error_cov)
        alpha = cho_solve((chol, True), errors, check_finite=False)
        stp_factor = None
        if cfg.residual_model == STP:
            beta = float(errors @ alpha)
            n = times.size
            stp_factor = (error_dof + beta - 2.0) / (error_dof + n - 2.0)
        return CoordResidual(
            times=times,
            targets=errors,
            kernel=spec,
            alpha=alpha,
            chol=chol,
            stp_factor=stp_factor,
        )
