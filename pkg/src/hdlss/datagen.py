"""Seeded generators for sparse location-shift models.

Each population is ``delta * pattern + noise``. The pattern is either fixed
(``a_k I_k`` for X, ``b_k J_k`` for Y) or redrawn per instance with Gaussian
amplitudes and Bernoulli(q) supports. Noise is standardised to unit marginal
variance for every kind, so ``delta`` alone sets the signal strength.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import LABEL_X, LABEL_Y

NOISE_KINDS = ("iid_gaussian", "moving_average", "garch")
PATTERN_MODES = ("fixed", "random_4_1", "random_shared_support")
Z_SOURCES = ("from_X", "from_Y", "random_equal")


@dataclass(frozen=True)
class SignalPattern:
    a: np.ndarray
    b: np.ndarray
    I: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        arrs = [np.array(v, dtype=float) for v in (self.a, self.b, self.I, self.J)]
        p = arrs[0].shape
        if any(x.shape != p or x.ndim != 1 for x in arrs):
            raise ValueError("a, b, I, J must be vectors of equal length")
        for name, x in zip("IJ", arrs[2:]):
            if not np.all((x == 0) | (x == 1)):
                raise ValueError(f"{name} entries must be 0 or 1")
        for name, x in zip("abIJ", arrs):
            x.setflags(write=False)
            object.__setattr__(self, name, x)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> np.ndarray:
        return self.a * self.I - self.b * self.J

    @property
    def d_norm_sq(self) -> float:
        d = self.d
        return float(d @ d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in "abIJ"}

    @classmethod
    def from_dict(cls, d) -> "SignalPattern":
        return cls(*(d[k] for k in "abIJ"))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "iid_gaussian"
    ma_coeffs: tuple = ()
    garch_params: tuple = ()

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "ma_coeffs", tuple(float(t) for t in self.ma_coeffs))
        object.__setattr__(self, "garch_params", tuple(float(t) for t in self.garch_params))
        if self.kind == "moving_average":
            if not self.ma_coeffs:
                raise ValueError("moving-average noise needs coefficients")
            ss = sum(t * t for t in self.ma_coeffs)
            if abs(ss - 1.0) > 1e-9:
                raise ValueError(f"MA coefficients must have unit sum of squares, got {ss:.12g}")
        if self.kind == "garch":
            if len(self.garch_params) != 3:
                raise ValueError("GARCH needs (omega, alpha, beta)")
            omega, alpha, beta = self.garch_params
            if alpha < 0 or beta < 0 or alpha + beta >= 1:
                raise ValueError("GARCH needs alpha, beta >= 0 and alpha + beta < 1")
            if abs(omega - (1 - alpha - beta)) > 1e-12:
                raise ValueError("GARCH omega must equal 1 - alpha - beta (unit variance)")

    @classmethod
    def iid(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def moving_average(cls, coeffs) -> "NoiseSpec":
        """MA noise with ``coeffs`` rescaled to unit sum of squares."""
        c = np.asarray(coeffs, dtype=float)
        norm = math.sqrt(float(c @ c))
        if norm == 0:
            raise ValueError("MA coefficients must not all be zero")
        return cls("moving_average", ma_coeffs=tuple(c / norm))

    @classmethod
    def garch(cls, alpha: float, beta: float) -> "NoiseSpec":
        return cls("garch", garch_params=(1.0 - alpha - beta, alpha, beta))


def gen_noise(spec: NoiseSpec, rows: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """``rows`` independent noise vectors of length ``p``."""
    if spec.kind == "iid_gaussian":
        return rng.standard_normal((rows, p))
    if spec.kind == "moving_average":
        theta = spec.ma_coeffs
        lags = len(theta) - 1
        eta = rng.standard_normal((rows, p + lags))
        out = theta[0] * eta[:, :p]
        for j in range(1, lags + 1):
            out += theta[j] * eta[:, j:j + p]
        return out
    omega, alpha, beta = spec.garch_params
    eta = rng.standard_normal((rows, p))
    out = np.empty((rows, p))
    var = np.ones(rows)
    out[:, 0] = eta[:, 0]
    for k in range(1, p):
        var = omega + alpha * out[:, k - 1] ** 2 + beta * var
        out[:, k] = np.sqrt(var) * eta[:, k]
    return out


def gen_noise_vector(spec: NoiseSpec, p: int, rng: np.random.Generator) -> np.ndarray:
    return gen_noise(spec, 1, p, rng)[0]


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one generative model.

    ``scale_X`` / ``scale_Y`` multiply the noise of the corresponding
    population (and of z when it belongs to that population); both default to 1.
    """

    p: int
    m: int
    n: int
    delta: float
    q: float = 1.0
    pattern_mode: str = "random_shared_support"
    pattern: Optional[SignalPattern] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    z_source: str = "random_equal"
    scale_X: float = 1.0
    scale_Y: float = 1.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.p < 1:
            out.append("p must be >= 1")
        if self.m < 1 or self.n < 1:
            out.append("m and n must be >= 1")
        # q = 0 is accepted here as the degenerate no-signal model
        if not (0 <= self.q <= 1):
            out.append("q must lie in [0,1]")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            out.append("delta must be finite and >= 0")
        if self.pattern_mode not in PATTERN_MODES:
            out.append(f"pattern_mode must be one of {PATTERN_MODES}")
        elif self.pattern_mode == "fixed":
            if self.pattern is None:
                out.append("fixed pattern mode needs a pattern")
            elif self.pattern.dim != self.p:
                out.append(f"pattern has length {self.pattern.dim}, expected p={self.p}")
        if self.z_source not in Z_SOURCES:
            out.append(f"z_source must be one of {Z_SOURCES}")
        if not (self.scale_X > 0 and self.scale_Y > 0):
            out.append("noise scales must be positive")
        return out

    @property
    def nu(self) -> int:
        return min(self.m, self.n)

    def lr_admissible(self) -> bool:
        return max(self.m + 1, self.n + 1) * self.delta ** 2 < 0.5

    def to_dict(self) -> dict:
        d = {
            "p": self.p, "m": self.m, "n": self.n, "delta": self.delta, "q": self.q,
            "pattern_mode": self.pattern_mode,
            "pattern": None if self.pattern is None else self.pattern.to_dict(),
            "noise": {
                "kind": self.noise.kind,
                "ma_coeffs": list(self.noise.ma_coeffs),
                "garch_params": list(self.noise.garch_params),
            },
            "z_source": self.z_source, "scale_X": self.scale_X, "scale_Y": self.scale_Y,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        if d.get("pattern") is not None:
            d["pattern"] = SignalPattern.from_dict(d["pattern"])
        if "noise" in d:
            d["noise"] = NoiseSpec(**d["noise"])
        return cls(**d)


@dataclass(frozen=True)
class GeneratedInstance:
    train_X: np.ndarray
    train_Y: np.ndarray
    z: np.ndarray
    truth: str
    realized_pattern: SignalPattern
    realized_d_norm_sq: float


def draw_pattern(spec: ModelSpec, rng: np.random.Generator) -> SignalPattern:
    if spec.pattern_mode == "fixed":
        return spec.pattern
    p, q = spec.p, spec.q
    A = rng.standard_normal(p)
    B = rng.standard_normal(p)
    I = (rng.random(p) < q).astype(float)
    if spec.pattern_mode == "random_shared_support":
        J = I
    else:
        J = (rng.random(p) < q).astype(float)
    return SignalPattern(A, B, I, J)


def gen_instance(spec: ModelSpec, rng: np.random.Generator) -> GeneratedInstance:
    """One training set pair plus a test vector whose class is set by ``spec.z_source``.

    Draw order (pattern, X noise, Y noise, class coin, z noise) is fixed so a
    given stream always yields the same instance.
    """
    pat = draw_pattern(spec, rng)
    mean_X = spec.delta * pat.a * pat.I
    mean_Y = spec.delta * pat.b * pat.J
    X = mean_X + spec.scale_X * gen_noise(spec.noise, spec.m, spec.p, rng)
    Y = mean_Y + spec.scale_Y * gen_noise(spec.noise, spec.n, spec.p, rng)
    if spec.z_source == "from_X":
        truth = LABEL_X
    elif spec.z_source == "from_Y":
        truth = LABEL_Y
    else:
        truth = LABEL_X if rng.random() < 0.5 else LABEL_Y
    if truth == LABEL_X:
        z = mean_X + spec.scale_X * gen_noise_vector(spec.noise, spec.p, rng)
    else:
        z = mean_Y + spec.scale_Y * gen_noise_vector(spec.noise, spec.p, rng)
    return GeneratedInstance(X, Y, z, truth, pat, pat.d_norm_sq)


def gen_population(spec: ModelSpec, label: str, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """``size`` draws from one population of a fixed-pattern model."""
    if spec.pattern_mode != "fixed":
        raise ValueError("population pools need a fixed pattern")
    pat = spec.pattern
    if label == LABEL_X:
        return spec.delta * pat.a * pat.I + spec.scale_X * gen_noise(spec.noise, size, spec.p, rng)
    return spec.delta * pat.b * pat.J + spec.scale_Y * gen_noise(spec.noise, size, spec.p, rng)


def delta_critical(c: float, nu: float, p: float, q: float) -> float:
    """Signal amplitude ``c (nu p q^2)^(-1/4)``."""
    for name, v in (("c", c), ("nu", nu), ("p", p), ("q", q)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return c * (nu * p * q * q) ** -0.25


def check_sparsity_floor(q: float, m: int, p: int, C: float = 1.0) -> bool:
    """Warn and return False when ``q < C (m/p)^(1/2)``."""
    floor = C * math.sqrt(m / p)
    if q < floor:
        warnings.warn(
            f"sparsity q={q} below the floor C*(m/p)^(1/2)={floor:.4g}; "
            "the critical-rate calibration may not apply",
            stacklevel=2,
        )
        return False
    return True


def fixed_pattern(p: int, q: float, a: float = 1.0, b: float = -1.0,
                  shared: bool = True) -> SignalPattern:
    """Deterministic pattern with the first ``round(p q)`` components active."""
    active = np.zeros(p)
    active[: int(round(p * q))] = 1.0
    return SignalPattern(np.full(p, a), np.full(p, b), active, active if shared else np.zeros(p))

