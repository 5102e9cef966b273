"""Exact likelihood-ratio rule for the random-signal sparse model.

Under that model each component k carries an independent N(0,1) amplitude
switched on with probability q, so the per-component likelihood, averaged
over the amplitudes and supports, depends on the data only through
``S_k = sum_i X_ik``, ``T_k = sum_j Y_jk`` and ``z_k``. Everything is kept in
log space; the exponents grow with ``(S_k + z_k)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifiers import Decision, decide


@dataclass(frozen=True)
class LrParams:
    m: int
    n: int
    q: float
    delta: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if not 0 <= self.q <= 1:
            raise ValueError("q must lie in [0,1]")
        if not self.delta >= 0:
            raise ValueError("delta must be >= 0")

    def swapped(self) -> "LrParams":
        return LrParams(self.n, self.m, self.q, self.delta)


@dataclass(frozen=True)
class SufficientStats:
    S: np.ndarray
    T: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        S, T, z = (np.asarray(v, dtype=float) for v in (self.S, self.T, self.z))
        if S.shape != T.shape or z.shape[-1] != S.shape[-1]:
            raise ValueError("S, T and z must share the dimension p")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_samples(cls, train_X, train_Y, z) -> "SufficientStats":
        return cls(np.sum(train_X, axis=0), np.sum(train_Y, axis=0), z)


@dataclass(frozen=True)
class LrAnalytics:
    mu_S: float
    mu_T: float
    mu_SZ: float
    mu_TZ: float
    log_rho_bias: float


def gaussian_sq_mgf(c: float) -> float:
    """``E exp(c N^2 / 2) = (1 - c)^(-1/2)`` for standard normal N and c < 1."""
    if not c < 1:
        raise ValueError(f"E exp(cN^2/2) is infinite for c >= 1 (c={c})")
    return (1.0 - c) ** -0.5


def _log_bracket(q, size, delta, s):
    """log[1 - q + q (size d^2 + 1)^(-1/2) exp(d^2 s^2 / (2 (size d^2 + 1)))]."""
    d2 = delta * delta
    denom = size * d2 + 1.0
    with np.errstate(divide="ignore"):
        log_off = np.log1p(-q) if q < 1 else -np.inf
        log_on = (np.log(q) if q > 0 else -np.inf) - 0.5 * math.log(denom)
    return np.logaddexp(log_off, log_on + 0.5 * d2 * np.square(s) / denom)


def log_psi1(params: LrParams, S_k, T_k, z_k):
    """Log conditional mean of the likelihood factor when z shares X's pattern."""
    m, n, q, d = params.m, params.n, params.q, params.delta
    return _log_bracket(q, m + 1, d, np.add(S_k, z_k)) + _log_bracket(q, n, d, T_k)


def log_psi2(params: LrParams, S_k, T_k, z_k):
    """Log conditional mean of the likelihood factor when z shares Y's pattern."""
    m, n, q, d = params.m, params.n, params.q, params.delta
    return _log_bracket(q, n + 1, d, np.add(T_k, z_k)) + _log_bracket(q, m, d, S_k)


def log_rho(params: LrParams, stats: SufficientStats):
    """Sum over components of log psi1 - log psi2; a batch of z rows gives an array."""
    terms = log_psi1(params, stats.S, stats.T, stats.z) - log_psi2(params, stats.S, stats.T, stats.z)
    total = np.sum(terms, axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def lr_classify(params: LrParams, stats: SufficientStats) -> Decision:
    return decide(log_rho(params, stats))


def _inv_sqrt_minus_one(x):
    # (1 - x)^(-1/2) - 1 without cancellation for small x
    return math.expm1(-0.5 * math.log1p(-x))


def mu_single(size: int, delta: float) -> float:
    """``(1 - size^2 delta^4)^(-1/2) - 1``: mu_S with size m, mu_T with size n."""
    x = size * size * delta ** 4
    if x >= 1:
        raise ValueError(f"size^2 delta^4 = {x:.4g} must be < 1")
    return _inv_sqrt_minus_one(x)


def _check_domain(params: LrParams):
    d4 = params.delta ** 4
    m, n = params.m, params.n
    if (m + 1) ** 2 * d4 >= 1:
        raise ValueError(f"(m+1)^2 delta^4 = {(m + 1) ** 2 * d4:.4g} must be < 1")
    if (n * n + 1) * d4 >= 1:
        raise ValueError(f"(n^2+1) delta^4 = {(n * n + 1) * d4:.4g} must be < 1")


def mu_terms(params: LrParams) -> tuple[float, float, float, float]:
    """Closed-form (mu_S, mu_T, mu_SZ, mu_TZ)."""
    _check_domain(params)
    d4 = params.delta ** 4
    m, n, q = params.m, params.n, params.q
    g = _inv_sqrt_minus_one
    mu_S = g(m * m * d4)
    mu_T = g(n * n * d4)
    mu_SZ = g((m + 1) ** 2 * d4)
    mu_TZ = g(d4) + g(n * n * d4) + q * (g((n * n + 1) * d4) - g(d4) - g(n * n * d4))
    return mu_S, mu_T, mu_SZ, mu_TZ


def log_rho_bias(params: LrParams, p: int) -> float:
    """``p log[(1 + q^2 mu_SZ)(1 + q^2 mu_T) / ((1 + q^2 mu_TZ)(1 + q^2 mu_S))]``."""
    mu_S, mu_T, mu_SZ, mu_TZ = mu_terms(params)
    q2 = params.q ** 2
    return p * (math.log1p(q2 * mu_SZ) + math.log1p(q2 * mu_T)
                - math.log1p(q2 * mu_TZ) - math.log1p(q2 * mu_S))


def lr_analytics(params: LrParams, p: int) -> LrAnalytics:
    return LrAnalytics(*mu_terms(params), log_rho_bias(params, p))


def log_rho_moments(params: LrParams, p: int) -> tuple[float, float]:
    """Small-signal mean and variance of log rho under population X.

    Mean ``(m + n) p q^2 delta^4 / 2`` and variance ``(m + n) p q^2 delta^4``.
    """
    omega = (params.m + params.n) * p * params.q ** 2 * params.delta ** 4
    return 0.5 * omega, omega
