"""Comparison trackers for the benchmarks.

``WindowedGpTracker`` regresses raw position measurements with a zero-mean
windowed GP, learning (variance, length scale, iid noise variance) jointly by
marginal likelihood: no trend removal and no colored-noise model.  It
documents what the decomposition buys: with a zero prior mean the posterior
is pulled toward zero wherever the data constrain it weakly.

``TrendOnlyTracker`` is stage one alone: the sliding-window polynomial
evaluated at the current time, no uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .gp import GpModel, HyperBounds, fit_hyperparams_with_noise, gp_predict
from .kernels import KernelSpec
from .trend import Window, eval_trend, fit_trend

_WIDE_BOUNDS = HyperBounds(variance=(1e-6, 1e12), length_scale=(1e-2, 1e3))


@dataclass(frozen=True)
class WindowedGpConfig:
    window_len: int = 8
    kernel_init: KernelSpec = KernelSpec(100.0, 5.0)
    noise_init: float = 1.0
    bounds: HyperBounds = field(default_factory=lambda: _WIDE_BOUNDS)
    noise_bounds: tuple[float, float] = (1e-8, 1e8)
    coordinates: int = 2

    def __post_init__(self):
        if self.window_len < 2:
            raise ConfigError("window_len must be >= 2")
        if self.coordinates < 1:
            raise ConfigError("coordinates must be >= 1")


class WindowedGpTracker:
    """Zero-mean GP directly on measurements, hyperparameters re-fit online."""

    def __init__(self, config: WindowedGpConfig):
        self.config = config
        self.reset()

    def reset(self) -> None:
        self._window = Window(self.config.window_len)
        self._specs = [self.config.kernel_init] * self.config.coordinates
        self._noise = [self.config.noise_init] * self.config.coordinates

    def step(self, time: float, measurement) -> np.ndarray:
        """Ingest a measurement, re-fit hyperparameters, estimate at ``time``."""
        cfg = self.config
        measurement = np.atleast_1d(np.asarray(measurement, dtype=float))
        self._window.push(time, measurement)
        times = self._window.times
        values = self._window.values
        if len(self._window) >= 2:
            for j in range(cfg.coordinates):
                self._specs[j], self._noise[j] = fit_hyperparams_with_noise(
                    times,
                    values[:, j],
                    self._specs[j],
                    self._noise[j],
                    bounds=cfg.bounds,
                    noise_bounds=cfg.noise_bounds,
                )
        return self.estimate(float(time))

    def estimate(self, t: float) -> np.ndarray:
        """Posterior mean at any time, from the current window and kernel."""
        times = self._window.times
        values = self._window.values
        out = np.empty(self.config.coordinates)
        for j in range(self.config.coordinates):
            model = GpModel(self._specs[j], noise_variance=self._noise[j])
            out[j] = gp_predict(model, times, values[:, j], float(t)).mean
        return out


@dataclass(frozen=True)
class TrendOnlyConfig:
    window_len: int = 5
    poly_order: int = 2
    coordinates: int = 2

    def __post_init__(self):
        if self.window_len < self.poly_order + 1:
            raise ConfigError("window_len must be >= poly_order + 1")


class TrendOnlyTracker:
    """Sliding-window polynomial fit evaluated at the current time."""

    def __init__(self, config: TrendOnlyConfig):
        self.config = config
        self.reset()

    def reset(self) -> None:
        self._window = Window(self.config.window_len)
        self._trend = None

    def step(self, time: float, measurement) -> np.ndarray:
        measurement = np.atleast_1d(np.asarray(measurement, dtype=float))
        self._window.push(time, measurement)
        order = min(self.config.poly_order, len(self._window) - 1)
        self._trend = fit_trend(self._window, order)
        return eval_trend(self._trend, float(time))

    def estimate(self, t: float) -> np.ndarray:
        return eval_trend(self._trend, float(t))
