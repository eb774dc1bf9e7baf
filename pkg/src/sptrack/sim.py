"""Benchmark scenario generators, colored measurement noise, and metrics.

Four single-target scenarios: two large-scale coordinated-turn trajectories
(gradual and sharp), a random-turn-rate maneuvering trajectory, and a
polynomial-mean GP trajectory.  Measurement noise is temporally correlated:
either one RBF Gaussian-process draw, or a 95/5 mixture of a base and an
inflated-variance GP path (heavy tails).

Everything is reproducible: generators are pure functions of (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .exceptions import ConfigError
from .kernels import KernelSpec, build_cov, cholesky_factor


@dataclass(frozen=True)
class CoordinatedTurnSpec:
    """Constant velocity, then a constant-rate turn, then constant velocity."""

    name: str
    steps: int
    dt: float
    speed_range: tuple[float, float] = (150.0, 250.0)
    turn_rate_deg: float = 15.0
    turn_duration: float = 10.0
    lead_time: float = 15.0
    initial_heading_deg: float = 0.0
    initial_position: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RandomTurnSpec:
    """Constant speed with a random-walk turn rate (highly maneuvering)."""

    name: str
    steps: int
    dt: float
    speed: float = 10.0
    turn_rate_noise_var: float = 0.15
    initial_turn_rate: float = 0.0
    initial_heading_deg: float = 0.0
    initial_position: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class PolynomialGpSpec:
    """Per-coordinate GP around a quadratic mean with random coefficients."""

    name: str
    steps: int
    dt: float
    kernel: KernelSpec = KernelSpec(1.0, 1.0)
    velocity_range: tuple[float, float] = (-15.0, 15.0)
    accel_range: tuple[float, float] = (-1.0, 1.0)
    initial_position: tuple[float, float] = (0.0, 0.0)


ScenarioSpec = CoordinatedTurnSpec | RandomTurnSpec | PolynomialGpSpec

DEFAULT_SCENARIOS: dict[str, ScenarioSpec] = {
    "S1": CoordinatedTurnSpec("S1", steps=40, dt=1.0, turn_rate_deg=15.0,
                              turn_duration=10.0, lead_time=15.0),
    "S2": CoordinatedTurnSpec("S2", steps=36, dt=1.0, turn_rate_deg=30.0,
                              turn_duration=9.0, lead_time=13.0),
    "S3": RandomTurnSpec("S3", steps=100, dt=0.1),
    "S4": PolynomialGpSpec("S4", steps=100, dt=0.1),
}


def sample_times(spec: ScenarioSpec) -> np.ndarray:
    """Measurement times k * dt for discrete steps k = 1..steps."""
    return spec.dt * np.arange(1, spec.steps + 1)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _ct_positions(spec: CoordinatedTurnSpec, speed: float, times: np.ndarray) -> np.ndarray:
    heading0 = math.radians(spec.initial_heading_deg)
    omega = math.radians(spec.turn_rate_deg)
    t1 = spec.lead_time
    t2 = spec.lead_time + spec.turn_duration
    p0 = np.asarray(spec.initial_position, dtype=float)

    def heading_at(t):
        return heading0 + omega * (min(t, t2) - t1) if t > t1 else heading0

    def position(t: float) -> np.ndarray:
        p = p0 + speed * min(t, t1) * np.array([math.cos(heading0), math.sin(heading0)])
        if t > t1 and omega != 0.0:
            dt_turn = min(t, t2) - t1
            h = heading0 + omega * dt_turn
            p = p + (speed / omega) * np.array(
                [math.sin(h) - math.sin(heading0), -math.cos(h) + math.cos(heading0)]
            )
        elif t > t1 and omega == 0.0:
            dt_turn = min(t, t2) - t1
            p = p + speed * dt_turn * np.array([math.cos(heading0), math.sin(heading0)])
        if t > t2:
            h = heading_at(t2 + 1.0)
            p = p + speed * (t - t2) * np.array([math.cos(h), math.sin(h)])
        return p

    return np.array([position(float(t)) for t in times])


def gen_truth(spec: ScenarioSpec, seed_or_rng) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth positions at the sample times: (times, positions (T, 2))."""
    rng = _as_rng(seed_or_rng)
    times = sample_times(spec)

    if isinstance(spec, CoordinatedTurnSpec):
        speed = float(rng.uniform(*spec.speed_range))
        return times, _ct_positions(spec, speed, times)

    if isinstance(spec, RandomTurnSpec):
        heading = math.radians(spec.initial_heading_deg)
        omega = float(spec.initial_turn_rate)
        pos = np.asarray(spec.initial_position, dtype=float)
        sigma = math.sqrt(spec.turn_rate_noise_var)
        out = np.empty((spec.steps, 2))
        for i in range(spec.steps):
            omega += float(rng.normal(0.0, sigma))
            new_heading = heading + omega * spec.dt
            if omega != 0.0:
                pos = pos + (spec.speed / omega) * np.array(
                    [math.sin(new_heading) - math.sin(heading),
                     -math.cos(new_heading) + math.cos(heading)]
                )
            else:
                pos = pos + spec.speed * spec.dt * np.array(
                    [math.cos(heading), math.sin(heading)]
                )
            heading = new_heading
            out[i] = pos
        return times, out

    if isinstance(spec, PolynomialGpSpec):
        out = np.empty((spec.steps, 2))
        coeffs = [
            (float(rng.uniform(*spec.velocity_range)), float(rng.uniform(*spec.accel_range)))
            for _ in range(2)
        ]
        cov = build_cov(spec.kernel, times)
        chol = cholesky_factor(cov.entries)
        for j, (vel, acc) in enumerate(coeffs):
            mean = spec.initial_position[j] + vel * times + acc * times**2
            out[:, j] = mean + chol @ rng.standard_normal(spec.steps)
        return times, out

    raise ConfigError(f"unknown scenario spec type {type(spec).__name__}")


@dataclass(frozen=True)
class NoiseSpec:
    """Colored measurement noise: one GP draw, or a 95/5 two-GP mixture."""

    kind: str
    kernel: KernelSpec
    outlier_variance: float | None = None
    outlier_probability: float = 0.05
    grid_jitter: float = 0.3

    def __post_init__(self):
        if self.kind not in ("gp", "heavy_tailed"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.kind == "heavy_tailed":
            if self.outlier_variance is None or self.outlier_variance <= 0:
                raise ConfigError("heavy_tailed noise requires outlier_variance > 0")
            if not 0.0 <= self.outlier_probability <= 1.0:
                raise ConfigError("outlier_probability must be in [0, 1]")
        if not 0.0 <= self.grid_jitter < 0.5:
            raise ConfigError("grid_jitter must be in [0, 0.5) to keep times ordered")


def _gp_path(kernel: KernelSpec, times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if kernel.variance == 0.0:
        return np.zeros(times.size)
    chol = cholesky_factor(build_cov(kernel, times).entries)
    return chol @ rng.standard_normal(times.size)


def gen_noise(spec: NoiseSpec, times, seed_or_rng, coords: int = 2) -> np.ndarray:
    """Noise samples at the measurement times, shape (len(times), coords).

    Coordinates are independent.  The heavy-tailed generator draws base and
    inflated-variance GP paths on a jittered copy of the time grid and picks
    the inflated path at each step with the outlier probability.
    """
    rng = _as_rng(seed_or_rng)
    times = np.asarray(times, dtype=float).ravel()
    out = np.empty((times.size, coords))

    if spec.kind == "gp":
        for j in range(coords):
            out[:, j] = _gp_path(spec.kernel, times, rng)
        return out

    spacing = float(times[1] - times[0]) if times.size > 1 else 1.0
    jittered = np.sort(times + rng.uniform(-spec.grid_jitter, spec.grid_jitter,
                                           size=times.size) * spacing)
    outlier_kernel = replace(spec.kernel, variance=float(spec.outlier_variance))
    for j in range(coords):
        base = _gp_path(spec.kernel, jittered, rng)
        inflated = _gp_path(outlier_kernel, jittered, rng)
        mask = rng.uniform(size=times.size) < spec.outlier_probability
        out[:, j] = np.where(mask, inflated, base)
    return out


@dataclass(frozen=True)
class Trial:
    """One seeded trial: truth, measurements, and the seed that made them."""

    times: np.ndarray
    truth: np.ndarray
    measurements: np.ndarray
    seed: int


def make_trial(scenario: ScenarioSpec, noise: NoiseSpec, seed: int) -> Trial:
    """Generate truth and measurements; measurements are truth plus noise."""
    children = np.random.SeedSequence(seed).spawn(2)
    times, truth = gen_truth(scenario, np.random.default_rng(children[0]))
    samples = gen_noise(noise, times, np.random.default_rng(children[1]),
                        coords=truth.shape[1])
    return Trial(times, truth, truth + samples, int(seed))


def trial_rows(trial: Trial, trial_index: int) -> list[list]:
    """CSV rows: trial, k, t, truth_x, truth_y, meas_x, meas_y."""
    rows = []
    for i, t in enumerate(trial.times):
        rows.append(
            [trial_index, i + 1, float(t),
             float(trial.truth[i, 0]), float(trial.truth[i, 1]),
             float(trial.measurements[i, 0]), float(trial.measurements[i, 1])]
        )
    return rows


# -- metrics -----------------------------------------------------------------


def _stacked_errors(truths, estimates) -> np.ndarray:
    truths = [np.asarray(t, dtype=float) for t in truths]
    estimates = [np.asarray(e, dtype=float) for e in estimates]
    if len(truths) != len(estimates) or len(truths) == 0:
        raise ValueError("need one estimate array per truth array")
    shape = truths[0].shape
    for t, e in zip(truths, estimates):
        if t.shape != shape or e.shape != shape:
            raise ValueError("misaligned trial shapes")
    return np.stack(truths) - np.stack(estimates)


def rmse_curve(truths, estimates) -> np.ndarray:
    """Per-step position RMSE across trials (Euclidean over coordinates)."""
    err = _stacked_errors(truths, estimates)
    return np.sqrt(np.mean(np.sum(err**2, axis=-1), axis=0))


def rmse(truths, estimates, k: int) -> float:
    """RMSE at step index k (0-based into the time axis)."""
    return float(rmse_curve(truths, estimates)[k])


def armse(truths, estimates) -> float:
    """Time-averaged RMSE."""
    return float(np.mean(rmse_curve(truths, estimates)))


# -- JSON serialization ------------------------------------------------------

_SCENARIO_TYPES = {
    "coordinated_turn": CoordinatedTurnSpec,
    "random_turn": RandomTurnSpec,
    "polynomial_gp": PolynomialGpSpec,
}


def _kernel_to_dict(kernel: KernelSpec) -> dict:
    return {"variance": kernel.variance, "length_scale": kernel.length_scale,
            "jitter": kernel.jitter}


def kernel_from_dict(data: dict) -> KernelSpec:
    try:
        return KernelSpec(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel spec {data!r}: {exc}") from exc


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    kind = {v: k for k, v in _SCENARIO_TYPES.items()}[type(spec)]
    data = asdict(spec)
    if isinstance(spec, PolynomialGpSpec):
        data["kernel"] = _kernel_to_dict(spec.kernel)
    return {"type": kind, **data}


def scenario_from_dict(data: dict) -> ScenarioSpec:
    """Build a scenario from {"id": "S1", ...field overrides} or a full dict."""
    data = dict(data)
    base = None
    if "id" in data:
        scenario_id = data.pop("id")
        base = DEFAULT_SCENARIOS.get(scenario_id)
        if base is None:
            raise ConfigError(f"unknown scenario id {scenario_id!r}")
    kind = data.pop("type", None)
    if base is None:
        if kind not in _SCENARIO_TYPES:
            raise ConfigError(f"unknown or missing scenario type {kind!r}")
        cls = _SCENARIO_TYPES[kind]
    else:
        cls = type(base)
        if kind is not None and _SCENARIO_TYPES.get(kind) is not cls:
            raise ConfigError(f"scenario type {kind!r} conflicts with id default")
    if "kernel" in data and isinstance(data["kernel"], dict):
        data["kernel"] = kernel_from_dict(data["kernel"])
    for key in ("speed_range", "velocity_range", "accel_range", "initial_position"):
        if key in data and isinstance(data[key], list):
            data[key] = tuple(data[key])
    try:
        return replace(base, **data) if base is not None else cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario config: {exc}") from exc


def noise_to_dict(spec: NoiseSpec) -> dict:
    data = asdict(spec)
    data["kernel"] = _kernel_to_dict(spec.kernel)
    return data


def noise_from_dict(data: dict) -> NoiseSpec:
    data = dict(data)
    if "kernel" in data and isinstance(data["kernel"], dict):
        data["kernel"] = kernel_from_dict(data["kernel"])
    try:
        return NoiseSpec(**data)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad noise config: {exc}") from exc


def default_noise(scenario_name: str, kind: str) -> NoiseSpec:
    """The benchmark noise models: large-scale for S1/S2, small for S3/S4."""
    large = scenario_name in ("S1", "S2")
    base_var = 25.0 if large else 0.25
    length = 1.0 if large else 0.1
    if kind == "gp":
        return NoiseSpec("gp", KernelSpec(base_var, length))
    if kind == "heavy_tailed":
        return NoiseSpec("heavy_tailed", KernelSpec(base_var, length),
                         outlier_variance=10.0 * base_var)
    raise ConfigError(f"unknown noise kind {kind!r}")
