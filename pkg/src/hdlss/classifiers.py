"""Two-population classification rules.

Every rule reduces to a real statistic; a test vector is assigned to X when
the statistic is strictly positive and to Y otherwise (ties go to Y).
Statistic functions accept a single vector ``z`` of shape ``(p,)`` or a batch
of shape ``(k, p)`` and return a float or a length-``k`` array accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .banded import BandedMatrix, WIDE_RIDGE_LADDER, banded_cov_estimate, sv_stat
from .data import LABEL_X, LABEL_Y


class ScaleNotEstimable(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, kkt_residual):
        super().__init__(message)
        self.kkt_residual = kkt_residual


@dataclass(frozen=True)
class Decision:
    label: str
    statistic: float


def decide(statistic: float) -> Decision:
    return Decision(LABEL_X if statistic > 0 else LABEL_Y, float(statistic))


def _as_sample(sample, name="sample") -> np.ndarray:
    arr = np.asarray(sample, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty list of vectors")
    return arr


def _pair(train_X, train_Y):
    X = _as_sample(train_X, "train_X")
    Y = _as_sample(train_Y, "train_Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: X has {X.shape[1]}, Y has {Y.shape[1]}")
    return X, Y


def _check_z(z, p):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != p or z.ndim > 2:
        raise ValueError(f"dimension mismatch: z has {z.shape[-1]}, model has {p}")
    return z


def _out(values, z):
    return float(values) if np.ndim(z) == 1 else values


# --- centroid ---------------------------------------------------------------

def tau_hat_sq(sample) -> float:
    """Pairwise-difference estimate of the variance trace.

    ``sum_{i1, i2} ||X_i1 - X_i2||^2 / (2 m (m - 1))``, unbiased for the sum of
    the component variances.
    """
    X = _as_sample(sample)
    m = X.shape[0]
    if m < 2:
        raise ScaleNotEstimable("scale not estimable from fewer than 2 vectors")
    # pdist lists each unordered pair once; the double sum counts it twice
    return float(pdist(X, "sqeuclidean").sum() / (m * (m - 1)))


@dataclass(frozen=True)
class CentroidModel:
    mean_X: np.ndarray
    mean_Y: np.ndarray
    tau_sq_X: Optional[float]
    tau_sq_Y: Optional[float]
    m: int
    n: int

    @property
    def dim(self) -> int:
        return self.mean_X.shape[0]


def centroid_train(train_X, train_Y) -> CentroidModel:
    X, Y = _pair(train_X, train_Y)
    m, n = len(X), len(Y)
    return CentroidModel(
        mean_X=X.mean(axis=0),
        mean_Y=Y.mean(axis=0),
        tau_sq_X=tau_hat_sq(X) if m >= 2 else None,
        tau_sq_Y=tau_hat_sq(Y) if n >= 2 else None,
        m=m,
        n=n,
    )


def t_stat(model: CentroidModel, z):
    """||z - mean_Y||^2 - ||z - mean_X||^2."""
    z = _check_z(z, model.dim)
    dy = z - model.mean_Y
    dx = z - model.mean_X
    return _out((dy * dy).sum(axis=-1) - (dx * dx).sum(axis=-1), z)


def t_sa_stat(model: CentroidModel, z):
    """Centroid statistic with the variance-trace bias of each class mean removed."""
    if model.tau_sq_X is None or model.tau_sq_Y is None:
        raise ScaleNotEstimable("scale adjustment requires min(m,n) >= 2")
    return t_stat(model, z) + model.tau_sq_X / model.m - model.tau_sq_Y / model.n


def classify_centroid(model: CentroidModel, z, adjusted: bool = True) -> Decision:
    stat = t_sa_stat(model, z) if adjusted else t_stat(model, z)
    return decide(stat)


# --- nearest neighbour --------------------------------------------------------

def nn_stat(train_X, train_Y, z, adjusted: bool = False, k: int = 1):
    """Difference of nearest squared distances, Y minus X.

    With ``k > 1`` the mean of the k smallest squared distances in each class
    replaces the minimum. The adjusted form subtracts each class's estimated
    variance trace from its distance, cancelling the trace term in the
    expected squared distance from z to a training point.
    """
    X, Y = _pair(train_X, train_Y)
    z = _check_z(z, X.shape[1])
    if k < 1 or k > min(len(X), len(Y)):
        raise ValueError(f"k must lie in [1, {min(len(X), len(Y))}]")
    zz = np.atleast_2d(z)

    def near(S):
        d = cdist(zz, S, "sqeuclidean")
        if k == 1:
            return d.min(axis=1)
        return np.sort(d, axis=1)[:, :k].mean(axis=1)

    dx, dy = near(X), near(Y)
    if adjusted:
        if len(X) < 2 or len(Y) < 2:
            raise ScaleNotEstimable("scale-adjusted nearest neighbour requires min(m,n) >= 2")
        dx = dx - tau_hat_sq(X)
        dy = dy - tau_hat_sq(Y)
    stat = dy - dx
    return float(stat[0]) if z.ndim == 1 else stat


def nn_classify(train_X, train_Y, z, adjusted: bool = False, k: int = 1) -> Decision:
    return decide(nn_stat(train_X, train_Y, z, adjusted=adjusted, k=k))


# --- naive Bayes ----------------------------------------------------------------

@dataclass(frozen=True)
class NaiveBayesModel:
    mean_X: np.ndarray
    mean_Y: np.ndarray
    var_X: np.ndarray
    var_Y: np.ndarray
    ridge: float


def naive_bayes_train(train_X, train_Y, ridge: float = 0.0) -> NaiveBayesModel:
    """Per-class, per-component Gaussian fit; ``ridge`` is added to every variance."""
    X, Y = _pair(train_X, train_Y)
    if len(X) < 2 or len(Y) < 2:
        raise ScaleNotEstimable("naive Bayes needs at least 2 vectors per class")
    if not np.isfinite(ridge) or ridge < 0:
        raise ValueError("ridge must be finite and >= 0")
    var_X = X.var(axis=0, ddof=1) + ridge
    var_Y = Y.var(axis=0, ddof=1) + ridge
    if np.any(var_X <= 0) or np.any(var_Y <= 0):
        raise ValueError("zero variance component; use a positive ridge")
    return NaiveBayesModel(X.mean(axis=0), Y.mean(axis=0), var_X, var_Y, float(ridge))


def naive_bayes_stat(model: NaiveBayesModel, z):
    """Log-likelihood ratio of the two fitted product-Gaussian densities."""
    z = _check_z(z, model.mean_X.shape[0])
    lx = -0.5 * (np.log(model.var_X) + (z - model.mean_X) ** 2 / model.var_X)
    ly = -0.5 * (np.log(model.var_Y) + (z - model.mean_Y) ** 2 / model.var_Y)
    return _out((lx - ly).sum(axis=-1), z)


def naive_bayes_classify(model: NaiveBayesModel, z) -> Decision:
    return decide(naive_bayes_stat(model, z))


# --- linear SVM -------------------------------------------------------------------

@dataclass(frozen=True)
class LinearSvmModel:
    weight: np.ndarray
    intercept: float
    duals: np.ndarray
    labels: np.ndarray
    cost: float
    kkt_residual: float
    iterations: int


def svm_dual_objective(duals, labels, gram) -> float:
    """Dual objective sum(a) - a^T Q a / 2 with Q_ij = y_i y_j K_ij (maximised)."""
    ay = duals * labels
    return float(duals.sum() - 0.5 * ay @ gram @ ay)


def svm_train(train_X, train_Y, cost: float = 1.0, tol: float = 1e-8,
              max_iter: int = 1_000_000) -> LinearSvmModel:
    """Soft-margin linear SVM by SMO on the maximal violating pair.

    X points carry label +1 and Y points -1. Iteration stops once the KKT gap
    ``max_{I_up} -y G - min_{I_low} -y G`` is at most ``tol``.
    """
    X, Y = _pair(train_X, train_Y)
    if not cost > 0:
        raise ValueError("cost must be positive")
    P = np.vstack([X, Y])
    y = np.r_[np.ones(len(X)), -np.ones(len(Y))]
    K = P @ P.T
    N = len(y)
    alpha = np.zeros(N)
    grad = -np.ones(N)  # gradient of a^T Q a / 2 - sum(a)
    C = float(cost)
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = np.flatnonzero(up)[np.argmax(score[up])]
        j = np.flatnonzero(low)[np.argmin(score[low])]
        gap = score[i] - score[j]
        if gap <= tol:
            break
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        curv = K[i, i] + K[j, j] - 2 * K[i, j]
        step = min(room_i, room_j)
        if curv > 1e-12:
            step = min(step, gap / curv)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += step * y * (K[:, i] - K[:, j])
    else:
        raise ConvergenceError(
            f"SMO did not converge in {max_iter} iterations (KKT gap {gap:.3g})", float(gap)
        )
    np.clip(alpha, 0.0, C, out=alpha)
    weight = (alpha * y) @ P
    free = (alpha > 1e-12 * C) & (alpha < C * (1 - 1e-12))
    score = -y * grad
    if free.any():
        intercept = float(score[free].mean())
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = score[up].max() if up.any() else score[low].min()
        lo = score[low].min() if low.any() else score[up].max()
        intercept = float((hi + lo) / 2)
    return LinearSvmModel(weight, intercept, alpha, y, C, float(gap), it)


def svm_stat(model: LinearSvmModel, z):
    z = _check_z(z, model.weight.shape[0])
    return _out(z @ model.weight + model.intercept, z)


def svm_classify(model: LinearSvmModel, z) -> Decision:
    return decide(svm_stat(model, z))


# --- scaled-variance (banded covariance) ------------------------------------------

@dataclass(frozen=True)
class SvModel:
    mean_X: np.ndarray
    mean_Y: np.ndarray
    sigma_X: BandedMatrix
    sigma_Y: BandedMatrix


def sv_train(train_X, train_Y, bandwidth: int = 1, ridge_ladder=WIDE_RIDGE_LADDER) -> SvModel:
    X, Y = _pair(train_X, train_Y)
    return SvModel(
        X.mean(axis=0),
        Y.mean(axis=0),
        banded_cov_estimate(X, bandwidth, ridge_ladder=ridge_ladder),
        banded_cov_estimate(Y, bandwidth, ridge_ladder=ridge_ladder),
    )


def sv_model_stat(model: SvModel, z):
    z = _check_z(z, model.mean_X.shape[0])
    return sv_stat(model.sigma_X, model.sigma_Y, model.mean_X, model.mean_Y, z)


def sv_classify(model: SvModel, z) -> Decision:
    return decide(sv_model_stat(model, z))
