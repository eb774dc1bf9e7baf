"""Online continuous-time target tracking.

A trajectory is modeled as a deterministic polynomial trend plus a stationary
stochastic residual.  Each incoming measurement slides a window, refits the
trend, learns the residual kernel from the fitting errors (Gaussian or
Student-t likelihood), subtracts the known colored-noise kernel, and yields a
queryable estimate with uncertainty at any time.
"""

from .baselines import (
    TrendOnlyConfig,
    TrendOnlyTracker,
    WindowedGpConfig,
    WindowedGpTracker,
)
from .config import ExperimentConfig, TrackerEntry, load_config, validate_config
from .exceptions import (
    ConditioningError,
    ConfigError,
    GridMismatchError,
    InsufficientDataError,
    OptimizationError,
    OrderingError,
    SptrackError,
)
from .experiment import run_experiment
from .gp import GpModel, GpPosterior, HyperBounds, fit_hyperparams, gp_log_marginal, gp_predict
from .kernels import (
    CovMatrix,
    KernelSpec,
    MeasurementMap,
    add_kernels,
    build_cov,
    kernel_eval,
    psd_repair,
    recover_state_kernel,
    transform_kernel,
)
from .sim import (
    DEFAULT_SCENARIOS,
    NoiseSpec,
    Trial,
    armse,
    gen_noise,
    gen_truth,
    make_trial,
    rmse,
    rmse_curve,
)
from .stp import (
    MatchedStp,
    StpModel,
    StpPosterior,
    match_linear,
    match_shift,
    match_sum,
    recover_state_kernel_stp,
    stp_predict,
)
from .tracker import Tracker, TrackerConfig, TrackOutput
from .trend import PolyTrend, Window, eval_trend, fit_trend, fitting_errors

__all__ = [name for name in dir() if not name.startswith("_")]
