"""Stage one of the tracker: sliding-window polynomial trend fitting.

Window times are normalized to [-1, 1] before the Vandermonde design matrix
is built; raw discrete time indices make higher powers ill-conditioned.  The
solve goes through QR rather than the normal equations for the same reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import solve_triangular

from .exceptions import ConditioningError, InsufficientDataError, OrderingError


class TimedSample(NamedTuple):
    time: float
    value: np.ndarray


class Window:
    """The most recent measurements, ordered by strictly increasing time.

    Mutable, single-owner: one tracker instance pushes into one window.
    """

    def __init__(self, max_len: int):
        max_len = int(max_len)
        if max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {max_len}")
        self.max_len = max_len
        self._samples: list[TimedSample] = []

    def push(self, time: float, value) -> None:
        time = float(time)
        if self._samples and time <= self._samples[-1].time:
            raise OrderingError(
                f"time {time} is not after the last sample at {self._samples[-1].time}"
            )
        value = np.atleast_1d(np.asarray(value, dtype=float)).copy()
        self._samples.append(TimedSample(time, value))
        if len(self._samples) > self.max_len:
            del self._samples[0]

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def samples(self) -> tuple[TimedSample, ...]:
        return tuple(self._samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self._samples])

    @property
    def values(self) -> np.ndarray:
        """Stacked sample values, shape (n, coordinates)."""
        return np.array([s.value for s in self._samples])


@dataclass(frozen=True)
class PolyTrend:
    """Fitted polynomial trend in normalized time.

    ``coeffs`` holds ascending powers by row, one column per coordinate; the
    polynomial argument is (t - t_center) / t_scale.
    """

    coeffs: np.ndarray
    order: int
    t_center: float
    t_scale: float
    window_end: float

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape[0] != self.order + 1:
            raise ValueError(
                f"coeffs has {coeffs.shape[0]} rows for order {self.order}"
            )
        if not self.t_scale > 0:
            raise ValueError("t_scale must be > 0")

    def unnormalized_coeffs(self) -> np.ndarray:
        """Equivalent ascending coefficients in raw (unnormalized) time."""
        inner = Polynomial([-self.t_center / self.t_scale, 1.0 / self.t_scale])
        out = np.zeros_like(self.coeffs)
        for j in range(self.coeffs.shape[1]):
            composed = Polynomial(self.coeffs[:, j])(inner)
            out[: len(composed.coef), j] = composed.coef
        return out


def fit_trend(window: Window, order: int) -> PolyTrend:
    """Ordinary least squares polynomial fit over the window.

    Deterministic; raises InsufficientDataError when the window holds fewer
    than order + 1 samples and ConditioningError on a rank-deficient design.
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be >= 0")
    n = len(window)
    if n < order + 1:
        raise InsufficientDataError(
            f"window holds {n} samples, need {order + 1} for order {order}"
        )
    times = window.times
    t_center = 0.5 * (times[0] + times[-1])
    half_span = 0.5 * (times[-1] - times[0])
    t_scale = half_span if half_span > 0 else 1.0
    tau = (times - t_center) / t_scale
    design = np.vander(tau, order + 1, increasing=True)
    q, r = np.linalg.qr(design)
    pivots = np.abs(np.diag(r))
    if pivots.min() <= 1e-12 * pivots.max():
        raise ConditioningError("trend design matrix is rank deficient")
    coeffs = solve_triangular(r, q.T @ window.values, lower=False)
    return PolyTrend(coeffs, order, t_center, t_scale, window_end=times[-1])


def eval_trend(trend: PolyTrend, t):
    """Evaluate the trend at time t (scalar -> (r,), array -> (..., r))."""
    tau = (np.asarray(t, dtype=float) - trend.t_center) / trend.t_scale
    result = np.broadcast_to(trend.coeffs[-1], tau.shape + trend.coeffs[-1].shape).copy()
    for row in trend.coeffs[-2::-1]:
        result = result * tau[..., None] + row
    return result


def fitting_errors(window: Window, trend: PolyTrend) -> list[TimedSample]:
    """Per-sample residuals y_t minus the trend prediction, in window order."""
    return [
        TimedSample(s.time, s.value - eval_trend(trend, s.time))
        for s in window.samples
    ]
