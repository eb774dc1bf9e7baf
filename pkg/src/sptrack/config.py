"""Experiment configuration: JSON schema, tracker registry, validation.

A config document looks like:

    {
      "scenario": {"id": "S1"},
      "noise": {"kind": "gp"},
      "trackers": [
        {"name": "trend-gp", "kind": "trend-gp"},
        {"name": "trend-stp", "kind": "trend-stp", "dof": 5.0},
        {"name": "trend-only", "kind": "trend-only"},
        {"name": "windowed-gp", "kind": "windowed-gp", "window_len": 8}
      ],
      "trials": 100,
      "base_seed": 7
    }

Scenario fields override the named default; a noise block without a kernel
gets the scenario's benchmark noise model.  Trend trackers that do not name a
noise_kernel are handed the moment-matched kernel of the experiment's noise
(for the mixture: the probability-weighted variance).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .baselines import TrendOnlyConfig, WindowedGpConfig
from .exceptions import ConfigError
from .gp import HyperBounds
from .kernels import KernelSpec
from .sim import (
    NoiseSpec,
    ScenarioSpec,
    default_noise,
    kernel_from_dict,
    noise_from_dict,
    scenario_from_dict,
)
from .tracker import TrackerConfig

TRACKER_KINDS = ("trend-gp", "trend-stp", "trend-only", "windowed-gp")


@dataclass(frozen=True)
class TrackerEntry:
    name: str
    kind: str
    config: TrackerConfig | WindowedGpConfig | TrendOnlyConfig

    @property
    def window_len(self) -> int:
        return self.config.window_len


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    noise: NoiseSpec
    trackers: tuple[TrackerEntry, ...]
    trials: int = 100
    base_seed: int = 0
    eval_start: int | None = None
    eval_lag: int = 0
    dump_trajectories: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be >= 0")
        if not 0 <= self.eval_lag < self.scenario.steps:
            raise ConfigError(
                f"eval_lag must be in 0..{self.scenario.steps - 1}, got {self.eval_lag}"
            )
        names = [t.name for t in self.trackers]
        if len(names) != len(set(names)):
            raise ConfigError(f"tracker names must be unique, got {names}")
        if not self.trackers:
            raise ConfigError("at least one tracker is required")
        start = self.resolved_eval_start()
        if not 1 <= start <= self.scenario.steps:
            raise ConfigError(
                f"eval_start {start} outside 1..{self.scenario.steps}"
            )

    def resolved_eval_start(self) -> int:
        """First step included in the metrics: after every window has filled."""
        if self.eval_start is not None:
            return self.eval_start
        return max(t.window_len for t in self.trackers) + 1


def matched_noise_kernel(noise: NoiseSpec) -> KernelSpec:
    """The known-noise kernel handed to trend trackers.

    For the heavy-tailed mixture this is the probability-weighted variance at
    the base length scale, i.e. the second moment of the mixture process.
    """
    if noise.kind == "gp":
        return noise.kernel
    p = noise.outlier_probability
    variance = (1.0 - p) * noise.kernel.variance + p * noise.outlier_variance
    return KernelSpec(variance, noise.kernel.length_scale, noise.kernel.jitter)


def _bounds_from_dict(data: dict) -> HyperBounds:
    try:
        return HyperBounds(
            variance=tuple(data["variance"]) if "variance" in data else HyperBounds.variance,
            length_scale=tuple(data["length_scale"])
            if "length_scale" in data
            else HyperBounds.length_scale,
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad bounds {data!r}: {exc}") from exc


def tracker_entry_from_dict(data: dict, noise: NoiseSpec) -> TrackerEntry:
    data = dict(data)
    name = data.pop("name", None)
    kind = data.pop("kind", None)
    if not name:
        raise ConfigError("tracker entry needs a name")
    if kind not in TRACKER_KINDS:
        raise ConfigError(f"tracker {name!r}: unknown kind {kind!r}")

    for key in ("kernel_init", "noise_kernel"):
        if key in data and isinstance(data[key], dict):
            data[key] = kernel_from_dict(data[key])
    if "bounds" in data and isinstance(data["bounds"], dict):
        data["bounds"] = _bounds_from_dict(data["bounds"])
    if "noise_bounds" in data and isinstance(data["noise_bounds"], list):
        data["noise_bounds"] = tuple(data["noise_bounds"])

    try:
        if kind in ("trend-gp", "trend-stp"):
            data.setdefault("noise_kernel", matched_noise_kernel(noise))
            data["residual_model"] = "stp" if kind == "trend-stp" else "gp"
            config = TrackerConfig(**data)
        elif kind == "windowed-gp":
            config = WindowedGpConfig(**data)
        else:
            config = TrendOnlyConfig(**data)
    except (TypeError, ValueError, ConfigError) as exc:
        raise ConfigError(f"tracker {name!r}: {exc}") from exc
    return TrackerEntry(name=name, kind=kind, config=config)


def experiment_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    data = dict(data)
    try:
        scenario = scenario_from_dict(data.pop("scenario"))
    except KeyError:
        raise ConfigError("config needs a 'scenario' block") from None

    noise_data = data.pop("noise", None)
    if noise_data is None:
        raise ConfigError("config needs a 'noise' block")
    if "kernel" not in noise_data:
        noise = default_noise(scenario.name, noise_data.get("kind", "gp"))
        extra = {k: v for k, v in noise_data.items() if k != "kind"}
        if extra:
            noise = replace(noise, **extra)
    else:
        noise = noise_from_dict(noise_data)

    tracker_blocks = data.pop("trackers", None)
    if not tracker_blocks:
        raise ConfigError("config needs a non-empty 'trackers' list")
    trackers = tuple(tracker_entry_from_dict(t, noise) for t in tracker_blocks)

    try:
        return ExperimentConfig(scenario=scenario, noise=noise, trackers=trackers, **data)
    except TypeError as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return experiment_from_dict(data)


def validate_config(path) -> list[str]:
    """Diagnostics for a config file; empty list means valid."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        return [f"cannot read {path}: {exc}"]
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]

    diagnostics: list[str] = []
    if not isinstance(data, dict):
        return ["config document must be a JSON object"]

    scenario = None
    try:
        scenario = scenario_from_dict(data.get("scenario", {}))
    except ConfigError as exc:
        diagnostics.append(str(exc))

    noise = None
    noise_data = data.get("noise")
    if noise_data is None:
        diagnostics.append("config needs a 'noise' block")
    else:
        try:
            if "kernel" not in noise_data and scenario is not None:
                noise = default_noise(scenario.name, noise_data.get("kind", "gp"))
            else:
                noise = noise_from_dict(noise_data)
        except ConfigError as exc:
            diagnostics.append(str(exc))

    for block in data.get("trackers", []):
        if noise is None:
            break
        try:
            tracker_entry_from_dict(block, noise)
        except ConfigError as exc:
            diagnostics.append(str(exc))

    if not diagnostics:
        try:
            experiment_from_dict(data)
        except ConfigError as exc:
            diagnostics.append(str(exc))
    return diagnostics
