import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdlss.data import LABEL_X, LABEL_Y
from hdlss.lr_oracle import (
    LrParams, SufficientStats, gaussian_sq_mgf, log_psi1, log_psi2, log_rho, log_rho_bias,
    log_rho_moments, lr_analytics, lr_classify, mu_single, mu_terms,
)


def _gh(n):
    x, w = np.polynomial.hermite.hermgauss(n)
    return math.sqrt(2) * x, w / math.sqrt(math.pi)  # nodes/weights for E f(N(0,1))


def _quad_psi(m, n, q, delta, S, T, z, which, nodes=64):
    """E over (A, B, I, J) of the per-component likelihood ratio against pure noise.

    which=1: z shares X's mean delta*A*I; which=2: z shares Y's mean delta*B*J.
    Tensor-product Gauss-Hermite over (A, B), exact enumeration of (I, J).
    """
    x, w = _gh(nodes)
    A, B = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    total = 0.0
    for I in (0, 1):
        for J in (0, 1):
            pr = (q if I else 1 - q) * (q if J else 1 - q)
            if pr == 0:
                continue
            a, b = delta * A * I, delta * B * J
            if which == 1:
                ex = a * (S + z) - (m + 1) * a * a / 2 + b * T - n * b * b / 2
            else:
                ex = a * S - m * a * a / 2 + b * (T + z) - (n + 1) * b * b / 2
            total += pr * float((W * np.exp(ex)).sum())
    return total


def _draw(rng):
    m, n = (int(v) for v in rng.integers(1, 11, size=2))
    q = float(rng.uniform(0.05, 1))
    delta = float(rng.uniform(0, 0.3))
    S = float(rng.normal() * math.sqrt(m) * 1.5)
    T = float(rng.normal() * math.sqrt(n) * 1.5)
    z = float(rng.normal() * 1.5)
    return m, n, q, delta, S, T, z


def test_gaussian_sq_mgf_values():
    assert gaussian_sq_mgf(0) == 1.0
    assert gaussian_sq_mgf(0.5) == pytest.approx(1.4142136, abs=1e-7)
    with pytest.raises(ValueError):
        gaussian_sq_mgf(1.0)


def test_gaussian_sq_mgf_monte_carlo():
    N = np.random.default_rng(0).standard_normal(1_000_000)
    v = np.exp(N * N / 4)
    se = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - gaussian_sq_mgf(0.5)) <= 4 * se


def test_psi_trivial_cases():
    P0 = LrParams(3, 4, 0.0, 0.7)
    assert log_psi1(P0, 2.0, -1.0, 0.5) == 0 and log_psi2(P0, 2.0, -1.0, 0.5) == 0
    Pd = LrParams(3, 4, 0.4, 0.0)
    assert log_psi1(Pd, 2.0, -1.0, 0.5) == 0 and log_psi2(Pd, 2.0, -1.0, 0.5) == 0


def test_psi_quadrature_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m, n, q, delta, S, T, z = _draw(rng)
        P = LrParams(m, n, q, delta)
        for which, fn in ((1, log_psi1), (2, log_psi2)):
            quad = _quad_psi(m, n, q, delta, S, T, z, which)
            assert math.exp(fn(P, S, T, z)) == pytest.approx(quad, rel=1e-8)


def test_quadrature_converged():
    rng = np.random.default_rng(2)
    for _ in range(20):
        args = _draw(rng)
        a = _quad_psi(*args, which=1, nodes=64)
        b = _quad_psi(*args, which=1, nodes=128)
        assert a == pytest.approx(b, rel=1e-10)


def test_psi_swap_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m, n, q, delta, S, T, z = _draw(rng)
        a = log_psi2(LrParams(m, n, q, delta), S, T, z)
        b = log_psi1(LrParams(n, m, q, delta), T, S, z)
        assert a == b


def _stats(rng, p, m, n):
    return SufficientStats(rng.normal(size=p) * math.sqrt(m), rng.normal(size=p) * math.sqrt(n),
                           rng.normal(size=p))


def test_log_rho_trivial():
    rng = np.random.default_rng(4)
    st_ = _stats(rng, 50, 3, 4)
    assert log_rho(LrParams(3, 4, 0.0, 0.5), st_) == 0.0
    assert log_rho(LrParams(3, 4, 0.5, 0.0), st_) == 0.0


def test_log_rho_batch():
    rng = np.random.default_rng(5)
    P = LrParams(3, 4, 0.5, 0.3)
    S, T, Z = rng.normal(size=20), rng.normal(size=20), rng.normal(size=(3, 20))
    batch = log_rho(P, SufficientStats(S, T, Z))
    assert batch.shape == (3,)
    for z, b in zip(Z, batch):
        assert log_rho(P, SufficientStats(S, T, z)) == pytest.approx(b, rel=1e-14)


def test_sufficient_stats_from_samples():
    rng = np.random.default_rng(6)
    X, Y, z = rng.normal(size=(3, 5)), rng.normal(size=(2, 5)), rng.normal(size=5)
    s = SufficientStats.from_samples(X, Y, z)
    np.testing.assert_allclose(s.S, X.sum(axis=0))
    np.testing.assert_allclose(s.T, Y.sum(axis=0))
    with pytest.raises(ValueError):
        SufficientStats(np.zeros(3), np.zeros(4), np.zeros(3))


def test_lr_classify_tie():
    st_ = SufficientStats(np.ones(3), np.ones(3), np.ones(3))
    assert lr_classify(LrParams(2, 2, 0.0, 0.5), st_).label == LABEL_Y
    big = SufficientStats(np.full(3, 6.0), np.zeros(3), np.full(3, 3.0))
    assert lr_classify(LrParams(2, 2, 0.5, 0.5), big).label == LABEL_X


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0, 1), st.floats(0, 2),
       st.integers(0, 2**32 - 1))
def test_log_rho_antisymmetry(m, n, q, delta, seed):
    rng = np.random.default_rng(seed)
    S, T, z = rng.normal(size=(3, 10)) * 3
    a = log_rho(LrParams(m, n, q, delta), SufficientStats(S, T, z))
    b = log_rho(LrParams(n, m, q, delta), SufficientStats(T, S, z))
    assert a == pytest.approx(-b, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.integers(1, 50), st.floats(0, 1), st.floats(0, 10),
       st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_psi_finite(m, n, q, delta, S, T, z):
    P = LrParams(m, n, q, delta)
    assert math.isfinite(log_psi1(P, S, T, z))
    assert math.isfinite(log_psi2(P, S, T, z))


def _on_term(size, delta, s):
    d2 = delta * delta
    return -0.5 * math.log(size * d2 + 1) + 0.5 * d2 * s * s / (size * d2 + 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.floats(0.01, 1), st.floats(-20, 20),
       st.floats(-20, 20), st.floats(-20, 20))
def test_psi1_monotone_in_q(m, n, delta, S, T, z):
    # each bracket moves from 1 towards its "on" term as q grows
    grid = np.linspace(0, 1, 21)
    diffs = np.diff([log_psi1(LrParams(m, n, float(q), delta), S, T, z) for q in grid])
    ons = (_on_term(m + 1, delta, S + z), _on_term(n, delta, T))
    if min(ons) >= 0:
        assert np.all(diffs >= -1e-12)
    elif max(ons) <= 0:
        assert np.all(diffs <= 1e-12)


def _g(x):
    return (1 - x) ** -0.5 - 1


def test_mu_terms_values():
    assert mu_terms(LrParams(2, 3, 0.4, 0.0)) == (0.0, 0.0, 0.0, 0.0)
    # m = 1, delta^4 = 1/2 lies outside the joint domain ((m+1)^2 delta^4 = 2) but mu_S alone is finite
    assert mu_single(1, 0.5 ** 0.25) == pytest.approx(0.4142136, abs=1e-7)
    with pytest.raises(ValueError, match=r"\(m\+1\)\^2"):
        mu_terms(LrParams(1, 1, 0.5, 0.5 ** 0.25))
    a = lr_analytics(LrParams(2, 3, 0.4, 0.0), 100)
    assert a.log_rho_bias == 0.0 and a.mu_TZ == 0.0


def test_mu_domain():
    with pytest.raises(ValueError, match="must be < 1"):
        mu_terms(LrParams(3, 3, 0.5, 0.6))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.floats(0, 1), st.floats(0, 1))
def test_mu_ordering(m, n, q, frac):
    # scale delta into the finiteness domain
    d4 = frac * 0.99 / max((m + 1) ** 2, n * n + 1)
    mu_S, mu_T, mu_SZ, mu_TZ = mu_terms(LrParams(m, n, q, d4 ** 0.25))
    assert min(mu_S, mu_T, mu_SZ, mu_TZ) >= 0
    assert mu_SZ >= mu_S


def _mu_quadrature(m, n, q, delta, nodes=64):
    """The four mu terms from their defining expectations, by quadrature over the noise."""
    x, w = _gh(nodes)
    d2 = delta * delta

    def term(size, var_given):
        # [(size d^2 + 1)^(-1/2) E exp(d^2 W^2 / (2 (size d^2 + 1))) - 1] / q
        a = d2 / (size * d2 + 1)
        e = 0.0
        for pr, v in var_given:
            e += pr * float(w @ np.exp(0.5 * a * v * x * x))
        return ((size * d2 + 1) ** -0.5 * e - 1) / q

    bern = [(1 - q, 0), (q, 1)]
    mu_S = term(m, [(pi, m + d2 * m * m * I) for pi, I in bern])
    mu_T = term(n, [(pj, n + d2 * n * n * J) for pj, J in bern])
    # S + Z under P_X share the amplitude A_k I_k
    mu_SZ = term(m + 1, [(pi, m + 1 + d2 * (m + 1) ** 2 * I) for pi, I in bern])
    # T + Z under P_X: independent supports and amplitudes
    mu_TZ = term(n + 1, [(pi * pj, n + 1 + d2 * (n * n * J + I)) for pi, I in bern
                         for pj, J in bern])
    return mu_S, mu_T, mu_SZ, mu_TZ


def test_mu_terms_quadrature_oracle():
    rng = np.random.default_rng(7)
    for _ in range(30):
        m, n = (int(v) for v in rng.integers(1, 15, size=2))
        q = float(rng.uniform(0.05, 1))
        delta = float(rng.uniform(0, 0.3) / math.sqrt(max(m, n) + 1))
        got = mu_terms(LrParams(m, n, q, delta))
        np.testing.assert_allclose(got, _mu_quadrature(m, n, q, delta), rtol=1e-9, atol=1e-15)


def test_bias_direct_product():
    rng = np.random.default_rng(8)
    for _ in range(30):
        m, n, p = int(rng.integers(1, 15)), int(rng.integers(1, 15)), int(rng.integers(1, 5000))
        q = float(rng.uniform(0.05, 1))
        d4 = float(rng.uniform(0, 0.9)) / max((m + 1) ** 2, n * n + 1)
        mu_S, mu_T = _g(m * m * d4), _g(n * n * d4)
        mu_SZ = _g((m + 1) ** 2 * d4)
        mu_TZ = (1 - q) * (_g(d4) + _g(n * n * d4)) + q * _g((n * n + 1) * d4)
        q2 = q * q
        direct = p * math.log((1 + q2 * mu_SZ) * (1 + q2 * mu_T) / ((1 + q2 * mu_TZ) * (1 + q2 * mu_S)))
        got = log_rho_bias(LrParams(m, n, q, d4 ** 0.25), p)
        assert got == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_bias_zero_delta():
    assert log_rho_bias(LrParams(4, 4, 0.3, 0.0), 1000) == 0.0


@pytest.mark.parametrize("m", [4, 8, 16])
@pytest.mark.parametrize("f", [0.01, 0.03, 0.05])
def test_bias_small_signal(m, f):
    delta = math.sqrt(f / m)
    P = LrParams(m, m, 0.3, delta)
    ratio = log_rho_bias(P, 2000) / (m * 2000 * 0.09 * delta ** 4)
    assert abs(ratio - 1) <= 0.1


def test_moments_formula():
    mean, var = log_rho_moments(LrParams(5, 5, 0.5, 0.1), 4000)
    assert var == pytest.approx(10 * 4000 * 0.25 * 1e-4)
    assert mean == pytest.approx(var / 2)


def test_params_validation():
    with pytest.raises(ValueError):
        LrParams(0, 1, 0.5, 0.1)
    with pytest.raises(ValueError):
        LrParams(1, 1, 1.5, 0.1)
    with pytest.raises(ValueError):
        LrParams(1, 1, 0.5, -0.1)
    assert LrParams(2, 3, 0.5, 0.1).swapped() == LrParams(3, 2, 0.5, 0.1)
