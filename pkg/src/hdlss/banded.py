"""Banded sample covariance (Bickel-Levina style) and its inverse quadratic form.

Storage follows LAPACK's lower band layout: ``bands[i, j]`` holds
``M[j + i, j]`` for ``0 <= i <= bandwidth``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

# escalating diagonal loading, as a fraction of the average diagonal entry
RIDGE_LADDER = (0.0, 1e-8, 1e-6, 1e-4, 1e-2)
# banding a rank-deficient estimate (size << dim) can leave eigenvalues near
# -2 * max variance, well beyond the reach of RIDGE_LADDER
WIDE_RIDGE_LADDER = RIDGE_LADDER + (1e-1, 1.0, 10.0)


class FactorizationError(ArithmeticError):
    def __init__(self, message, smallest_pivot):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


def _ldl_pivots(bands: np.ndarray) -> np.ndarray:
    """Diagonal of D in M = L D L^T for a symmetric band matrix (diagnostics only)."""
    k, p = bands.shape[0] - 1, bands.shape[1]
    dense = np.zeros((p, p))
    for i in range(k + 1):
        idx = np.arange(p - i)
        dense[idx + i, idx] = bands[i, : p - i]
        dense[idx, idx + i] = bands[i, : p - i]
    pivots = np.empty(p)
    a = dense.copy()
    for j in range(p):
        pivots[j] = a[j, j]
        if pivots[j] == 0:
            pivots[j + 1:] = np.nan
            break
        hi = min(p, j + k + 1)
        col = a[j + 1:hi, j] / pivots[j]
        a[j + 1:hi, j + 1:hi] -= np.outer(col, a[j, j + 1:hi])
    return pivots


@dataclass(frozen=True)
class BandedMatrix:
    """Symmetric band matrix, Cholesky-factored on construction.

    If the matrix is not positive definite, ``ridge_fraction * trace / dim`` is
    added to the diagonal for each rung of ``ridge_ladder`` until the
    factorization succeeds; the amount added is kept in ``ridge_applied``.
    """

    bands: np.ndarray
    ridge_ladder: tuple = RIDGE_LADDER
    ridge_applied: float = field(init=False, default=0.0)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bands = np.array(self.bands, dtype=float)
        if bands.ndim != 2 or bands.shape[1] < 1:
            raise ValueError("bands must be a (bandwidth + 1, dim) array")
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)
        scale = bands[0].sum() / bands.shape[1]
        trial = bands
        for eps in self.ridge_ladder:
            trial = bands.copy()
            trial[0] += eps * scale
            try:
                chol = linalg.cholesky_banded(trial, lower=True)
            except linalg.LinAlgError:
                continue
            if np.all(chol[0] > 0):
                chol.setflags(write=False)
                object.__setattr__(self, "chol", chol)
                object.__setattr__(self, "ridge_applied", float(eps * scale))
                return
        pivots = _ldl_pivots(trial)
        smallest = float(np.nanmin(pivots))
        raise FactorizationError(
            f"banded matrix not positive definite after ridge escalation "
            f"(largest ridge {self.ridge_ladder[-1] * scale:.3g}, smallest pivot {smallest:.3g})",
            smallest,
        )

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def to_dense(self, with_ridge: bool = True) -> np.ndarray:
        p = self.dim
        out = np.zeros((p, p))
        for i in range(self.bandwidth + 1):
            idx = np.arange(p - i)
            out[idx + i, idx] = self.bands[i, : p - i]
            out[idx, idx + i] = self.bands[i, : p - i]
        if with_ridge:
            out[np.diag_indices(p)] += self.ridge_applied
        return out

    @classmethod
    def from_dense(cls, matrix, bandwidth: int, **kwargs) -> "BandedMatrix":
        matrix = np.asarray(matrix, dtype=float)
        p = matrix.shape[0]
        if matrix.shape != (p, p):
            raise ValueError("matrix must be square")
        k = min(bandwidth, p - 1)
        bands = np.zeros((k + 1, p))
        for i in range(k + 1):
            bands[i, : p - i] = np.diagonal(matrix, -i)
        return cls(bands, **kwargs)


def banded_cov_estimate(sample, bandwidth: int = 1, **kwargs) -> BandedMatrix:
    """Unbiased sample covariance with entries beyond ``bandwidth`` diagonals set to zero."""
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    size, p = sample.shape
    if size < 2:
        raise ValueError("covariance needs at least 2 samples")
    if bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    k = min(bandwidth, p - 1)
    centred = sample - sample.mean(axis=0)
    bands = np.zeros((k + 1, p))
    for i in range(k + 1):
        bands[i, : p - i] = (centred[:, i:] * centred[:, : p - i]).sum(axis=0) / (size - 1)
    return BandedMatrix(bands, **kwargs)


def quad_form(matrix: BandedMatrix, v) -> np.ndarray | float:
    """``v^T M^{-1} v`` from the band Cholesky factor; rows of a 2-d ``v`` are separate vectors."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    rhs = v[:, None] if single else v.T
    if rhs.shape[0] != matrix.dim:
        raise ValueError(f"dimension mismatch: {rhs.shape[0]} vs {matrix.dim}")
    w = linalg.solve_banded((matrix.bandwidth, 0), matrix.chol, rhs)
    q = np.einsum("ij,ij->j", w, w)
    return float(q[0]) if single else q


def sv_stat(sigma_X: BandedMatrix, sigma_Y: BandedMatrix, mean_X, mean_Y, z):
    """Covariance-weighted centroid statistic; positive values favour population X."""
    z = np.asarray(z, dtype=float)
    return quad_form(sigma_Y, z - mean_Y) - quad_form(sigma_X, z - mean_X)
