"""Gaussian-process regression of the scalar field from point measurements.

The posterior uses a squared-exponential kernel
``k(a, b) = amplitude^2 * exp(-||a - b||^2 / (2 * length_scale^2))`` and a
training matrix regularized by ``noise_std^2 + jitter`` on the diagonal.  The
factorization is computed once at fit time and predictions run through two
triangular solves; no explicit matrix inverse is ever formed outside of test
oracles.

``FieldGP`` follows the scikit-learn estimator API (``fit``/``predict``,
``get_params``/``set_params``) so it can be dropped into pipelines and model
selection tooling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

__all__ = [
    "GPHyperparams",
    "GPPrediction",
    "GPFitError",
    "FieldGP",
    "kernel",
    "kernel_matrix",
    "RmseResult",
    "evaluate_rmse",
]


class GPFitError(RuntimeError):
    """Raised when the regularized training kernel cannot be factorized."""


@dataclass(frozen=True)
class GPHyperparams:
    """Kernel and noise hyperparameters.

    ``jitter`` is an absolute diagonal addition; pass ``None`` to use the
    default ``1e-9 * amplitude**2``.  Setting ``noise_std = jitter = 0``
    recovers the unregularized interpolating posterior.
    """

    amplitude: float = 2.0
    length_scale: float = 1.0
    noise_std: float = 0.1
    jitter: float | None = None

    def __post_init__(self) -> None:
        if self.amplitude <= 0:
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.jitter is not None and self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")

    @property
    def effective_jitter(self) -> float:
        if self.jitter is None:
            return 1e-9 * self.amplitude**2
        return self.jitter


@dataclass(frozen=True)
class GPPrediction:
    """Posterior mean and variance at a single query point."""

    mean: float
    variance: float


def kernel(a, b, hyper: GPHyperparams) -> float:
    """Squared-exponential covariance between two points."""
    d2 = float(np.sum((np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) ** 2))
    return hyper.amplitude**2 * np.exp(-d2 / (2.0 * hyper.length_scale**2))


def kernel_matrix(xa: np.ndarray, xb: np.ndarray, hyper: GPHyperparams) -> np.ndarray:
    """Cross-covariance matrix between two point sets of shape (n, 2), (m, 2)."""
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    d2 = np.sum((xa[:, None, :] - xb[None, :, :]) ** 2, axis=-1)
    return hyper.amplitude**2 * np.exp(-d2 / (2.0 * hyper.length_scale**2))


def _as_points(x, name: str = "X") -> np.ndarray:
    """Validate and coerce input locations to a finite (n, 2) float array."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1 and pts.shape[0] == 2:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite entries")
    return pts


class FieldGP(RegressorMixin, BaseEstimator):
    """Squared-exponential GP posterior over a planar scalar field.

    Parameters
    ----------
    amplitude : float, default=2.0
        Kernel signal standard deviation; prior variance is ``amplitude**2``.
    length_scale : float, default=1.0
        Kernel length scale controlling smoothness.
    noise_std : float, default=0.1
        Measurement noise standard deviation added (squared) to the training
        diagonal.
    jitter : float or None, default=None
        Extra absolute diagonal regularization; ``None`` means
        ``1e-9 * amplitude**2``.

    Attributes
    ----------
    X_train_ : ndarray of shape (m, 2)
        Training locations.
    z_train_ : ndarray of shape (m,)
        Training values.
    L_ : ndarray of shape (m, m)
        Lower Cholesky factor of the regularized training kernel.
    weights_ : ndarray of shape (m,)
        Solution of ``K_reg @ weights_ = z_train_``.
    """

    def __init__(
        self,
        amplitude: float = 2.0,
        length_scale: float = 1.0,
        noise_std: float = 0.1,
        jitter: float | None = None,
    ):
        self.amplitude = amplitude
        self.length_scale = length_scale
        self.noise_std = noise_std
        self.jitter = jitter

    @property
    def hyper(self) -> GPHyperparams:
        return GPHyperparams(
            amplitude=self.amplitude,
            length_scale=self.length_scale,
            noise_std=self.noise_std,
            jitter=self.jitter,
        )

    def fit(self, X, z) -> "FieldGP":
        """Build and factorize the regularized training kernel.

        Raises
        ------
        GPFitError
            If the regularized kernel matrix is not positive definite (for
            example duplicate points with ``noise_std = jitter = 0``).
        """
        hyper = self.hyper  # validates parameters
        X = _as_points(X)
        z = np.asarray(z, dtype=float).ravel()
        if X.shape[0] != z.shape[0]:
            raise ValueError(f"X and z disagree on m: {X.shape[0]} vs {z.shape[0]}")
        if X.shape[0] < 1:
            raise ValueError("at least one training point is required")
        if not np.all(np.isfinite(z)):
            raise ValueError("z contains non-finite entries")

        reg = hyper.noise_std**2 + hyper.effective_jitter
        k_train = kernel_matrix(X, X, hyper)
        k_train[np.diag_indices_from(k_train)] += reg
        try:
            cho, lower = cho_factor(k_train, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            eigs = np.linalg.eigvalsh(k_train)
            raise GPFitError(
                "training kernel is not positive definite after regularization "
                f"(m={X.shape[0]}, diagonal addition={reg:.3e}, "
                f"min eigenvalue={eigs.min():.3e}, max eigenvalue={eigs.max():.3e})"
            ) from exc

        self.X_train_ = X
        self.z_train_ = z
        self.L_ = np.tril(cho)
        self.weights_ = cho_solve((cho, lower), z, check_finite=False)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "L_"):
            raise RuntimeError("FieldGP must be fitted before predicting")

    def predict(self, X, return_var: bool = False):
        """Posterior mean (and optionally variance) at query locations.

        Variances come from ``k(x, x) - v.T @ v`` with ``v = L^-1 k_*``; tiny
        negative values from roundoff are clamped to zero.
        """
        self._check_fitted()
        Xq = _as_points(X, name="query X")
        k_cross = kernel_matrix(Xq, self.X_train_, self.hyper)
        mean = k_cross @ self.weights_
        if not return_var:
            return mean
        v = solve_triangular(self.L_, k_cross.T, lower=True, check_finite=False)
        var = self.hyper.amplitude**2 - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def predict_one(self, x) -> GPPrediction:
        """Scalar-point convenience wrapper around :meth:`predict`."""
        mean, var = self.predict(np.asarray(x, dtype=float)[None, :], return_var=True)
        return GPPrediction(mean=float(mean[0]), variance=float(var[0]))


@dataclass(frozen=True)
class RmseResult:
    """Root-mean-square prediction error, plus the range-normalized variant.

    ``normalized`` is None when the truth values have zero range.
    """

    rmse: float
    normalized: float | None


def evaluate_rmse(model: FieldGP, grid, truth) -> RmseResult:
    """RMSE of the posterior mean against ground truth on a set of points."""
    grid = _as_points(grid, name="grid")
    truth = np.asarray(truth, dtype=float).ravel()
    if grid.shape[0] != truth.shape[0]:
        raise ValueError(f"grid and truth disagree: {grid.shape[0]} vs {truth.shape[0]}")
    if grid.shape[0] < 1:
        raise ValueError("at least one evaluation point is required")
    mean = model.predict(grid)
    rmse = float(np.sqrt(np.mean((mean - truth) ** 2)))
    value_range = float(truth.max() - truth.min())
    normalized = rmse / value_range if value_range > 0 else None
    return RmseResult(rmse=rmse, normalized=normalized)
