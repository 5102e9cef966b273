"""Monte Carlo experiments on misclassification rates.

Replicate ``r`` always draws from the stream seeded by ``(master_seed, r)``,
and results are gathered in replicate order, so every report is identical
for any number of worker processes. Even replicates draw the test vector
from population X and odd ones from Y.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .classifiers import ScaleNotEstimable
from .data import LABEL_X, Dataset, SplitPlan, split_indices
from .datagen import ModelSpec, SignalPattern, delta_critical, gen_instance
from .rules import Rule, parse_rule


def replicate_rng(master_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(r,)))


def replicate_seed(master_seed: int, r: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(r,)).generate_state(1, np.uint64)[0])


def spec_digest(spec: ModelSpec) -> str:
    blob = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dataset_digest(dataset: Dataset, plan: SplitPlan) -> str:
    h = hashlib.sha256(np.ascontiguousarray(dataset.features).tobytes())
    h.update(dataset.is_x.tobytes())
    h.update(f"{plan.m},{plan.n},{plan.test_per_class}".encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class ErrorReport:
    err_X: float
    err_Y: float
    se_X: float
    se_Y: float
    reps: int
    reps_X: int
    reps_Y: int
    seed: int
    classifier_id: str
    spec_digest: str

    @property
    def per_class_error(self) -> tuple[float, float]:
        return self.err_X, self.err_Y

    @property
    def se(self) -> tuple[float, float]:
        return self.se_X, self.se_Y

    @property
    def total(self) -> float:
        return self.err_X + self.err_Y

    @property
    def se_total(self) -> float:
        return math.hypot(self.se_X, self.se_Y)

    @property
    def accuracy(self) -> float:
        """Balanced success rate, 1 - total / 2."""
        return 1.0 - self.total / 2.0

    @classmethod
    def from_rates(cls, err_X, err_Y, reps_X, reps_Y, **meta) -> "ErrorReport":
        def se(e, k):
            return math.sqrt(e * (1 - e) / k) if k else float("nan")

        err_X, err_Y = float(err_X), float(err_Y)
        return cls(err_X, err_Y, se(err_X, reps_X), se(err_Y, reps_Y),
                   reps_X + reps_Y, reps_X, reps_Y, **meta)


@dataclass
class Replicates:
    """Raw per-replicate output: one statistic row per classifier."""

    stats: np.ndarray
    is_x: np.ndarray
    d_norm_sq: np.ndarray
    rule_ids: list

    def report(self, i: int, seed: int, digest: str) -> ErrorReport:
        s = self.stats[i]
        x = self.is_x
        return ErrorReport.from_rates(
            np.mean(s[x] <= 0) if x.any() else 0.0,
            np.mean(s[~x] > 0) if (~x).any() else 0.0,
            int(x.sum()), int((~x).sum()),
            seed=seed, classifier_id=self.rule_ids[i], spec_digest=digest,
        )


def _check_compatible(rules: Sequence[Rule], m: int, n: int):
    for rule in rules:
        if min(m, n) < rule.min_class_size:
            raise ScaleNotEstimable(
                f"{rule.id} needs at least {rule.min_class_size} training vectors per class "
                f"(m={m}, n={n})"
            )


def _run_chunk(spec: ModelSpec, rule_ids, master_seed: int, start: int, stop: int):
    rules = [parse_rule(r) for r in rule_ids]
    by_class = {True: replace(spec, z_source="from_X"), False: replace(spec, z_source="from_Y")}
    count = stop - start
    stats = np.empty((len(rules), count))
    is_x = np.empty(count, dtype=bool)
    dns = np.empty(count)
    for i, r in enumerate(range(start, stop)):
        inst = gen_instance(by_class[r % 2 == 0], replicate_rng(master_seed, r))
        z = inst.z[None, :]
        for j, rule in enumerate(rules):
            stats[j, i] = rule.fit(inst.train_X, inst.train_Y, model=spec)(z)[0]
        is_x[i] = inst.truth == LABEL_X
        dns[i] = inst.realized_d_norm_sq
    return stats, is_x, dns


def _chunks(reps: int, workers: int):
    size = max(1, math.ceil(reps / (4 * workers)))
    return [(a, min(reps, a + size)) for a in range(0, reps, size)]


def run_replicates(spec: ModelSpec, classifier_ids, reps: int, master_seed: int = 0,
                   workers: int = 1) -> Replicates:
    """Generate ``reps`` instances and evaluate every classifier on each one."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if isinstance(classifier_ids, str):
        classifier_ids = [classifier_ids]
    rules = [parse_rule(c) for c in classifier_ids]
    _check_compatible(rules, spec.m, spec.n)
    ids = [r.id for r in rules]
    if workers <= 1:
        parts = [_run_chunk(spec, ids, master_seed, 0, reps)]
    else:
        bounds = _chunks(reps, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, spec, ids, master_seed, a, b) for a, b in bounds]
            parts = [f.result() for f in futures]
    return Replicates(
        np.concatenate([p[0] for p in parts], axis=1),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        ids,
    )


def estimate_errors(classifier_ids, spec: ModelSpec, reps: int = 4000, master_seed: int = 0,
                    workers: int = 1) -> list[ErrorReport]:
    res = run_replicates(spec, classifier_ids, reps, master_seed, workers)
    digest = spec_digest(spec)
    return [res.report(i, master_seed, digest) for i in range(len(res.rule_ids))]


def estimate_error(classifier_id: str, spec: ModelSpec, reps: int = 4000, master_seed: int = 0,
                   workers: int = 1) -> ErrorReport:
    return estimate_errors([classifier_id], spec, reps, master_seed, workers)[0]


# --- sweeps ------------------------------------------------------------------------

@dataclass
class SweepTable:
    axes: dict
    cells: list = field(default_factory=list)  # (params dict, ErrorReport)

    @property
    def expected_cells(self) -> int:
        return math.prod(len(v) for v in self.axes.values())

    def add(self, params: dict, report: ErrorReport):
        self.cells.append((dict(params), report))

    def reports(self, **match) -> list[ErrorReport]:
        return [r for p, r in self.cells if all(p.get(k) == v for k, v in match.items())]


def sweep_c(c_grid, base, spec_template: ModelSpec, reps: int = 4000, master_seed: int = 0,
            classifier_id: str = "centroid_sa", workers: int = 1) -> SweepTable:
    """Error at ``delta = c (nu p q^2)^(-1/4)`` over c and ``(p, nu, q)`` cells (m = n = nu)."""
    if any(not c > 0 for c in c_grid):
        raise ValueError("c values must be positive")
    if spec_template.pattern_mode == "fixed":
        raise ValueError("sweep_c varies p and needs a random pattern mode")
    table = SweepTable({"c": list(c_grid), "cell": [tuple(b) for b in base]})
    for c in c_grid:
        for p, nu, q in base:
            delta = delta_critical(c, nu, p, q)
            spec = replace(spec_template, p=int(p), m=int(nu), n=int(nu), q=float(q), delta=delta)
            rep = estimate_error(classifier_id, spec, reps, master_seed, workers)
            table.add({"c": c, "p": p, "nu": nu, "q": q, "delta": delta, "cell": (p, nu, q)}, rep)
    return table


@dataclass(frozen=True)
class CalibrationResult:
    target_accuracy: float
    delta_star: float
    bracket: tuple
    reps_per_probe: int
    achieved_accuracy: float
    probes: tuple = ()


def calibrate_delta(classifier_id: str, spec_template: ModelSpec, target_accuracy: float, m: int,
                    reps_per_probe: int = 2000, master_seed: int = 0,
                    delta_bounds: tuple = (0.0, None), tol: float = 0.01, max_iter: int = 30,
                    workers: int = 1) -> CalibrationResult:
    """Bisect on delta for a balanced accuracy of ``target_accuracy`` with m = n = ``m``.

    Every probe reuses the same replicate streams, so accuracy differences
    between probes come from delta alone.
    """
    if not 0.5 <= target_accuracy < 1:
        raise ValueError("target accuracy must lie in [0.5, 1)")
    base = replace(spec_template, m=m, n=m)
    probes = []

    def acc(delta):
        a = estimate_error(classifier_id, replace(base, delta=delta), reps_per_probe,
                           master_seed, workers).accuracy
        probes.append((delta, a))
        return a

    lo, hi = delta_bounds
    a_lo = acc(lo)
    if a_lo >= target_accuracy:
        return CalibrationResult(target_accuracy, lo, (lo, lo), reps_per_probe, a_lo, tuple(probes))
    if hi is None:
        hi = delta_critical(1.0, m, base.p, base.q if base.q > 0 else 1.0)
        a_hi = acc(hi)
        for _ in range(12):
            if a_hi >= target_accuracy:
                break
            lo, a_lo = hi, a_hi
            hi *= 2
            a_hi = acc(hi)
    else:
        a_hi = acc(hi)
    if a_hi < target_accuracy:
        raise ValueError(
            f"no bracket: accuracy {a_lo:.4f} at delta={lo:.4g} and {a_hi:.4f} at delta={hi:.4g}, "
            f"target {target_accuracy}"
        )
    for _ in range(max_iter):
        if a_hi - a_lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        a_mid = acc(mid)
        if a_mid >= target_accuracy:
            hi, a_hi = mid, a_mid
        else:
            lo, a_lo = mid, a_mid
    frac = (target_accuracy - a_lo) / (a_hi - a_lo) if a_hi > a_lo else 0.5
    delta_star = lo + frac * (hi - lo)
    achieved = acc(delta_star)
    slack = 3 * math.sqrt(0.5 * target_accuracy * (1 - target_accuracy) / reps_per_probe)
    if not (a_lo - slack <= achieved <= a_hi + slack):
        raise ValueError(
            f"accuracy not monotone in delta on the final bracket: {a_lo:.4f}, {achieved:.4f}, {a_hi:.4f}"
        )
    return CalibrationResult(target_accuracy, delta_star, (lo, hi), reps_per_probe, achieved,
                             tuple(probes))


CONFOUND_RULES = ("nn", "nn_sa", "centroid", "centroid_sa")


def confound_spec(sigma_X_sq, sigma_Y_sq, mu_sq, m, n, p) -> ModelSpec:
    """X ~ N(0, sigma_X^2 I), Y ~ N(mu 1, sigma_Y^2 I)."""
    pattern = SignalPattern(np.zeros(p), np.ones(p), np.ones(p), np.ones(p))
    return ModelSpec(p=p, m=m, n=n, delta=math.sqrt(mu_sq), q=1.0, pattern_mode="fixed",
                     pattern=pattern, scale_X=math.sqrt(sigma_X_sq), scale_Y=math.sqrt(sigma_Y_sq))


def confound_sweep(sigma_X_sq: float, sigma_Y_sq: float, mu_sq_grid, m: int, n: int, p: int,
                   reps: int = 500, master_seed: int = 0, classifier_ids=CONFOUND_RULES,
                   workers: int = 1) -> SweepTable:
    if not (sigma_X_sq > 0 and sigma_Y_sq > 0):
        raise ValueError("variances must be positive")
    if any(mu < 0 for mu in mu_sq_grid):
        raise ValueError("mu^2 values must be nonnegative")
    table = SweepTable({"mu_sq": list(mu_sq_grid), "classifier": list(classifier_ids)})
    for mu_sq in mu_sq_grid:
        spec = confound_spec(sigma_X_sq, sigma_Y_sq, mu_sq, m, n, p)
        for rep in estimate_errors(classifier_ids, spec, reps, master_seed, workers):
            table.add({"mu_sq": mu_sq, "classifier": rep.classifier_id,
                       "nn_threshold": abs(sigma_X_sq - sigma_Y_sq),
                       "centroid_threshold": abs(sigma_X_sq / m - sigma_Y_sq / n)}, rep)
    return table


def variance_scaling_check(grid, spec_template: ModelSpec, reps: int = 2000, master_seed: int = 0,
                           classifier_id: str = "centroid_sa", workers: int = 1) -> list[dict]:
    """Empirical variance of the statistic about its mean ``delta^2 s(Z) ||d||^2``.

    Each ``(p, nu)`` cell uses m = n = nu; the ratio column divides by ``p / nu``.
    """
    rows = []
    for p, nu in grid:
        if nu < 2:
            raise ValueError("nu must be >= 2")
        spec = replace(spec_template, p=int(p), m=int(nu), n=int(nu))
        if spec.pattern_mode == "fixed" and spec.pattern.dim != p:
            raise ValueError("fixed pattern length must match every p in the grid")
        res = run_replicates(spec, [classifier_id], reps, master_seed, workers)
        sign = np.where(res.is_x, 1.0, -1.0)
        resid = res.stats[0] - spec.delta ** 2 * sign * res.d_norm_sq
        var = float(np.var(resid, ddof=1))
        rows.append({"p": p, "nu": nu, "var": var, "ratio": var / (p / nu), "reps": reps,
                     "noise": spec.noise.kind})
    return rows


@dataclass(frozen=True)
class PairedComparison:
    first: ErrorReport
    second: Optional[ErrorReport]
    diff_total: float
    diff_se: float


def oracle_compare(spec: ModelSpec, reps: int = 4000, master_seed: int = 0,
                   classifier_id: str = "centroid_sa", include_oracle: bool = True,
                   workers: int = 1) -> PairedComparison:
    """Run a classifier and the likelihood-ratio rule on the same instances.

    ``diff_total`` is the classifier's total error minus the oracle's, with
    the standard error of the paired per-class differences.
    """
    if spec.pattern_mode != "random_4_1":
        raise ValueError("the likelihood-ratio oracle is exact only for the random_4_1 model")
    if not spec.lr_admissible():
        raise ValueError(
            f"max(m+1, n+1) delta^2 = {max(spec.m, spec.n) + 1} * {spec.delta ** 2:.4g} must be < 1/2"
        )
    ids = [classifier_id, "lr"] if include_oracle else [classifier_id]
    res = run_replicates(spec, ids, reps, master_seed, workers)
    digest = spec_digest(spec)
    first = res.report(0, master_seed, digest)
    if not include_oracle:
        return PairedComparison(first, None, float("nan"), float("nan"))
    second = res.report(1, master_seed, digest)
    wrong = np.where(res.is_x, res.stats <= 0, res.stats > 0).astype(float)
    diff = wrong[0] - wrong[1]
    x = res.is_x
    se = math.sqrt(np.var(diff[x], ddof=1) / x.sum() + np.var(diff[~x], ddof=1) / (~x).sum())
    return PairedComparison(first, second, first.total - second.total, se)


# --- dataset protocol -----------------------------------------------------------------

@dataclass
class BenchmarkResult:
    reports: dict
    skipped: dict


_POOL_DATASET = None


def _set_pool_dataset(dataset):
    global _POOL_DATASET
    _POOL_DATASET = dataset


def _bench_chunk(dataset, plan, rule_ids, master_seed, start, stop):
    dataset = dataset if dataset is not None else _POOL_DATASET
    rules = [parse_rule(r) for r in rule_ids]
    err = np.empty((len(rules), stop - start, 2))
    f = dataset.features
    for i, r in enumerate(range(start, stop)):
        tx, ty, sx, sy = split_indices(dataset, replace(plan, seed=replicate_seed(master_seed, r)))
        X, Y = f[tx], f[ty]
        for j, rule in enumerate(rules):
            stat = rule.fit(X, Y)
            err[j, i, 0] = np.mean(stat(f[sx]) <= 0)
            err[j, i, 1] = np.mean(stat(f[sy]) > 0)
    return err


def dataset_benchmark(dataset: Dataset, plan: SplitPlan, classifier_ids, reps: int = 2000,
                      master_seed: int = 0, workers: int = 1) -> BenchmarkResult:
    """Repeat subsample-train-test ``reps`` times and average per-class error rates.

    All classifiers see the same splits. Rules that need more training vectors
    per class than the plan provides are skipped with a reason.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    plan = plan.resolve(dataset)
    rules, skipped = [], {}
    for cid in classifier_ids:
        rule = parse_rule(cid)
        if rule.name == "lr":
            skipped[rule.id] = "likelihood-ratio rule needs a generative model"
        elif min(plan.m, plan.n) < rule.min_class_size:
            skipped[rule.id] = f"needs >= {rule.min_class_size} training vectors per class"
        else:
            rules.append(rule)
    ids = [r.id for r in rules]
    if workers <= 1:
        err = _bench_chunk(dataset, plan, ids, master_seed, 0, reps)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_set_pool_dataset,
                                 initargs=(dataset,)) as pool:
            futures = [pool.submit(_bench_chunk, None, plan, ids, master_seed, a, b)
                       for a, b in _chunks(reps, workers)]
            err = np.concatenate([fu.result() for fu in futures], axis=1)
    digest = dataset_digest(dataset, plan)
    reports = {}
    for j, cid in enumerate(ids):
        e_x, e_y = (float(v) for v in err[j].mean(axis=0))
        # one effective draw per replicate and class
        reports[cid] = ErrorReport(
            e_x, e_y, math.sqrt(e_x * (1 - e_x) / reps), math.sqrt(e_y * (1 - e_y) / reps),
            reps, reps, reps, master_seed, cid, digest,
        )
    return BenchmarkResult(reports, skipped)


@dataclass(frozen=True)
class RidgeSelection:
    best_ridge: float
    success_rate: float
    reports: dict


def ridge_oracle_select(source, ridge_grid, reps: int = 2000, master_seed: int = 0,
                        plan: Optional[SplitPlan] = None, workers: int = 1) -> RidgeSelection:
    """Grid ridge for naive Bayes maximising balanced success, ties to the smallest ridge.

    ``source`` is a Dataset (evaluated with ``plan``) or a ModelSpec (synthetic replicates).
    Every ridge is evaluated on the same splits or instances.
    """
    grid = sorted(float(r) for r in ridge_grid)
    if not grid:
        raise ValueError("ridge grid must be nonempty")
    ids = [f"naive_bayes:ridge={r!r}" for r in grid]
    if isinstance(source, Dataset):
        if plan is None:
            raise ValueError("a dataset source needs a SplitPlan")
        result = dataset_benchmark(source, plan, ids, reps, master_seed, workers)
        if result.skipped:
            raise ScaleNotEstimable(next(iter(result.skipped.values())))
        reports = {r: result.reports[parse_rule(c).id] for r, c in zip(grid, ids)}
    else:
        reps_list = estimate_errors(ids, source, reps, master_seed, workers)
        reports = dict(zip(grid, reps_list))
    best = max(grid, key=lambda r: (reports[r].accuracy, -r))
    return RidgeSelection(best, reports[best].accuracy, reports)
