"""Squared-exponential (RBF) kernel and the covariance algebra for tracking.

The residual and noise processes are stationary RBF processes.  Covariance
matrices over discrete time windows are plain numpy arrays wrapped together
with their time grids; a ``block_dim`` > 1 means each (i, j) time pair holds a
``block_dim x block_dim`` covariance block (used for vector-valued processes
under a non-scalar measurement matrix).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConditioningError, GridMismatchError

DEFAULT_JITTER = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """RBF hyperparameters.

    variance      marginal variance k(t, t), in squared state units
    length_scale  correlation time constant, seconds
    jitter        relative diagonal stabilizer applied when a square
                  covariance matrix is built; never part of pointwise
                  kernel evaluation
    """

    variance: float
    length_scale: float
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if not (np.isfinite(self.variance) and self.variance >= 0.0):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance!r}")
        if not (np.isfinite(self.length_scale) and self.length_scale > 0.0):
            raise ValueError(
                f"length_scale must be finite and > 0, got {self.length_scale!r}"
            )
        if not (np.isfinite(self.jitter) and self.jitter >= 0.0):
            raise ValueError(f"jitter must be finite and >= 0, got {self.jitter!r}")


def kernel_eval(spec: KernelSpec, t, t2):
    """Evaluate k(t, t2) = variance * exp(-(t - t2)^2 / (2 * length_scale^2)).

    Scalars or arrays (broadcast together).  Symmetric and stationary by
    construction; the spec's jitter plays no role here.
    """
    d = (np.asarray(t, dtype=float) - np.asarray(t2, dtype=float)) / spec.length_scale
    return spec.variance * np.exp(-0.5 * d * d)


@dataclass(frozen=True)
class CovMatrix:
    """A covariance matrix tied to its row/column time grids.

    ``entries`` has shape (n * block_dim, m * block_dim) for n row times and
    m column times.
    """

    entries: np.ndarray
    row_times: np.ndarray
    col_times: np.ndarray
    block_dim: int = 1

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        row_times = np.asarray(self.row_times, dtype=float).ravel()
        col_times = np.asarray(self.col_times, dtype=float).ravel()
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "row_times", row_times)
        object.__setattr__(self, "col_times", col_times)
        if row_times.size == 0 or col_times.size == 0:
            raise ValueError("time grids must be nonempty")
        if not (np.isfinite(row_times).all() and np.isfinite(col_times).all()):
            raise ValueError("time grids must be finite")
        if not np.isfinite(entries).all():
            raise ValueError("covariance entries must be finite")
        b = self.block_dim
        expected = (row_times.size * b, col_times.size * b)
        if b < 1 or entries.shape != expected:
            raise ValueError(
                f"entries shape {entries.shape} does not match grid/block "
                f"layout {expected}"
            )

    @property
    def is_square_grid(self) -> bool:
        return np.array_equal(self.row_times, self.col_times)


def build_cov(spec: KernelSpec, row_times, col_times=None) -> CovMatrix:
    """Covariance matrix of the RBF process over the given time grids.

    When the row and column grids coincide, ``jitter * max(diag)`` is added to
    the diagonal so the result stays Cholesky-factorizable.
    """
    row_times = np.asarray(row_times, dtype=float).ravel()
    col_times = row_times if col_times is None else np.asarray(col_times, dtype=float).ravel()
    if row_times.size == 0 or col_times.size == 0:
        raise ValueError("time grids must be nonempty")
    if not (np.isfinite(row_times).all() and np.isfinite(col_times).all()):
        raise ValueError("time grids must be finite")
    entries = kernel_eval(spec, row_times[:, None], col_times[None, :])
    if np.array_equal(row_times, col_times):
        entries = entries + spec.jitter * entries.diagonal().max() * np.eye(row_times.size)
    return CovMatrix(entries, row_times, col_times)


@dataclass(frozen=True)
class MeasurementMap:
    """Linear measurement matrix together with its one-sided inverses.

    ``left_inverse @ matrix = I`` and ``matrix.T @ right_inverse = I``; both
    exist exactly when the matrix has full column rank.  Maps without exact
    inverses can still be constructed (the forward transform never needs
    them) but state-kernel recovery refuses to use them.
    """

    matrix: np.ndarray
    left_inverse: np.ndarray
    right_inverse: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        A = np.atleast_2d(np.asarray(self.left_inverse, dtype=float))
        B = np.atleast_2d(np.asarray(self.right_inverse, dtype=float))
        object.__setattr__(self, "matrix", H)
        object.__setattr__(self, "left_inverse", A)
        object.__setattr__(self, "right_inverse", B)
        r = H.shape[1]
        if A.shape != (r, H.shape[0]) or B.shape != H.shape:
            raise ValueError("inverse shapes do not conform to the measurement matrix")

    @property
    def has_exact_inverses(self) -> bool:
        eye = np.eye(self.state_dim)
        return bool(
            np.allclose(self.left_inverse @ self.matrix, eye, atol=1e-10)
            and np.allclose(self.matrix.T @ self.right_inverse, eye, atol=1e-10)
        )

    def require_inverses(self) -> None:
        if not self.has_exact_inverses:
            raise ConditioningError(
                "measurement matrix has no exact one-sided inverses "
                "(full column rank required)"
            )

    @classmethod
    def from_matrix(cls, matrix) -> "MeasurementMap":
        """Build the map with Moore-Penrose one-sided inverses."""
        H = np.atleast_2d(np.asarray(matrix, dtype=float))
        A = np.linalg.pinv(H)
        return cls(H, A, A.T)

    @classmethod
    def scalar(cls, value: float = 1.0) -> "MeasurementMap":
        return cls.from_matrix([[float(value)]])

    @property
    def meas_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def state_dim(self) -> int:
        return self.matrix.shape[1]


def _blocks(cov: CovMatrix) -> np.ndarray:
    n, m, b = cov.row_times.size, cov.col_times.size, cov.block_dim
    return cov.entries.reshape(n, b, m, b)


def transform_kernel(cov: CovMatrix, mmap: MeasurementMap) -> CovMatrix:
    """Blockwise H K H^T: covariance of the measurement-space image."""
    if cov.block_dim != mmap.state_dim:
        raise ValueError(
            f"block_dim {cov.block_dim} does not match measurement matrix "
            f"with {mmap.state_dim} state columns"
        )
    H = mmap.matrix
    out = np.einsum("pa,namc,qc->npmq", H, _blocks(cov), H)
    p = mmap.meas_dim
    return CovMatrix(
        out.reshape(cov.row_times.size * p, cov.col_times.size * p),
        cov.row_times,
        cov.col_times,
        block_dim=p,
    )


def _require_same_grid(a: CovMatrix, b: CovMatrix):
    if (
        not np.array_equal(a.row_times, b.row_times)
        or not np.array_equal(a.col_times, b.col_times)
        or a.block_dim != b.block_dim
    ):
        raise GridMismatchError("covariance matrices are not on the same time grid")


def add_kernels(a: CovMatrix, b: CovMatrix) -> CovMatrix:
    """Covariance of the sum of two independent processes on a shared grid."""
    _require_same_grid(a, b)
    return CovMatrix(a.entries + b.entries, a.row_times, a.col_times, a.block_dim)


def psd_repair(cov: CovMatrix) -> CovMatrix:
    """Project a symmetric matrix onto the PSD cone by eigenvalue clipping."""
    M = cov.entries
    if M.shape[0] != M.shape[1] or not cov.is_square_grid:
        raise ValueError("psd_repair requires a square matrix on a single grid")
    scale = np.abs(M).max()
    if scale > 0 and np.abs(M - M.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    sym = 0.5 * (M + M.T)
    w, v = np.linalg.eigh(sym)
    repaired = (v * np.clip(w, 0.0, None)) @ v.T
    repaired = 0.5 * (repaired + repaired.T)
    return CovMatrix(repaired, cov.row_times, cov.col_times, cov.block_dim)


def recover_state_kernel(
    k_e: CovMatrix, k_v: CovMatrix, mmap: MeasurementMap
) -> CovMatrix:
    """State-space kernel A (k_e - k_v) B with PSD repair.

    Undoes the measurement map and the additive-noise composition: for the
    scalar map this is the PSD projection of the plain difference.
    """
    mmap.require_inverses()
    _require_same_grid(k_e, k_v)
    if not k_e.is_square_grid:
        raise GridMismatchError("state-kernel recovery requires a square grid")
    if k_e.block_dim != mmap.meas_dim:
        raise ValueError(
            f"block_dim {k_e.block_dim} does not match measurement dimension "
            f"{mmap.meas_dim}"
        )
    n = k_e.row_times.size
    b = k_e.block_dim
    diff = (k_e.entries - k_v.entries).reshape(n, b, n, b)
    A = mmap.left_inverse
    B = mmap.right_inverse
    out = np.einsum("ia,namc,cj->nimj", A, diff, B)
    r = mmap.state_dim
    recovered = CovMatrix(
        out.reshape(n * r, n * r), k_e.row_times, k_e.col_times, block_dim=r
    )
    return psd_repair(recovered)


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor; ConditioningError when not PD."""
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("matrix is not positive definite") from exc
