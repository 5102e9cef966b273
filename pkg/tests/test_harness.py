import math
from dataclasses import replace

import numpy as np
import pytest

from hdlss.classifiers import ScaleNotEstimable
from hdlss.data import Dataset, SplitPlan
from hdlss.datagen import (
    LABEL_X, LABEL_Y, ModelSpec, NoiseSpec, delta_critical, fixed_pattern, gen_population,
)
from hdlss.harness import (
    ErrorReport, calibrate_delta, confound_sweep, dataset_benchmark, estimate_error,
    estimate_errors, oracle_compare, replicate_rng, ridge_oracle_select, run_replicates,
    spec_digest, sweep_c, variance_scaling_check,
)
from hdlss.rules import parse_rule

SPEC = ModelSpec(p=200, m=4, n=4, delta=0.6, q=0.2)


def test_replicate_streams_independent_of_order():
    a = replicate_rng(3, 5).standard_normal(4)
    replicate_rng(3, 4).standard_normal(100)
    np.testing.assert_array_equal(a, replicate_rng(3, 5).standard_normal(4))
    assert not np.array_equal(a, replicate_rng(3, 6).standard_normal(4))


def test_always_x():
    rep = estimate_error("always_x", SPEC, reps=20)
    assert rep.per_class_error == (0.0, 1.0)
    assert rep.total == 1.0 and rep.se == (0.0, 0.0)


def test_se_formula_exact():
    rep = estimate_error("centroid_sa", SPEC, reps=101, master_seed=2)
    assert rep.reps_X == 51 and rep.reps_Y == 50
    assert rep.se_X == math.sqrt(rep.err_X * (1 - rep.err_X) / 51)
    assert rep.se_Y == math.sqrt(rep.err_Y * (1 - rep.err_Y) / 50)
    assert 0 <= rep.err_X <= 1 and 0 <= rep.err_Y <= 1


def test_zero_signal_is_chance():
    rep = estimate_error("centroid_sa", replace(SPEC, delta=0.0), reps=800, master_seed=1)
    assert abs(rep.total - 1) <= 4 * rep.se_total


def test_large_c_near_perfect():
    spec = replace(SPEC, delta=delta_critical(10, 4, 200, 0.2))
    assert estimate_error("centroid_sa", spec, reps=400).total <= 0.02


def test_incompatible_rule():
    with pytest.raises(ScaleNotEstimable, match="m=1"):
        estimate_error("centroid_sa", replace(SPEC, m=1), reps=4)
    assert estimate_error("centroid", replace(SPEC, m=1), reps=4).reps == 4


def test_unknown_rule():
    with pytest.raises(ValueError, match="unknown classifier"):
        estimate_error("forest", SPEC, reps=4)


def test_rule_ids():
    assert parse_rule("nn").id == "nn:k=1"
    assert parse_rule("naive_bayes:ridge=0.1").id == "naive_bayes:ridge=0.1"
    assert parse_rule("nn_sa:k=3").options == {"k": 3}
    with pytest.raises(ValueError, match="no option"):
        parse_rule("svm:k=3")


def test_worker_count_invariance():
    ids = ["centroid_sa", "nn", "svm"]
    a = estimate_errors(ids, SPEC, reps=40, master_seed=9, workers=1)
    b = estimate_errors(ids, SPEC, reps=40, master_seed=9, workers=3)
    assert a == b
    ra = run_replicates(SPEC, ids, 40, 9, 1)
    rb = run_replicates(SPEC, ids, 40, 9, 2)
    np.testing.assert_array_equal(ra.stats, rb.stats)


def test_spec_digest():
    assert spec_digest(SPEC) == spec_digest(ModelSpec(p=200, m=4, n=4, delta=0.6, q=0.2))
    assert spec_digest(SPEC) != spec_digest(replace(SPEC, delta=0.61))
    assert estimate_error("centroid", SPEC, reps=4).spec_digest == spec_digest(SPEC)


def test_sweep_c_shape_and_monotone():
    cells = [(200, 4, 0.2), (400, 4, 0.2)]
    grid = [0.3, 1.0, 2.0, 4.0]
    table = sweep_c(grid, cells, SPEC, reps=300, master_seed=4)
    assert len(table.cells) == table.expected_cells == 8
    for cell in cells:
        reps = table.reports(cell=cell)
        for a, b in zip(reps, reps[1:]):
            assert b.total <= a.total + 2 * math.hypot(a.se_total, b.se_total)
        assert reps[0].total >= 0.5 - 2 * reps[0].se_total


def test_sweep_c_rejects_fixed_and_bad_c():
    with pytest.raises(ValueError):
        sweep_c([0.0], [(10, 2, 0.5)], SPEC)
    fixed = ModelSpec(p=10, m=2, n=2, delta=1.0, pattern_mode="fixed", pattern=fixed_pattern(10, 1))
    with pytest.raises(ValueError, match="random pattern"):
        sweep_c([1.0], [(10, 2, 0.5)], fixed)


def test_calibrate_chance_target():
    res = calibrate_delta("centroid_sa", SPEC, 0.5, 4, reps_per_probe=200, master_seed=1)
    # small next to the c = 1 scale, where accuracy is already well above chance
    assert res.delta_star <= 0.5 * delta_critical(1, 4, 200, 0.2)
    assert abs(res.probes[0][1] - 0.5) <= 3 * math.sqrt(0.25 / 200)
    assert res.bracket[0] <= res.delta_star <= res.bracket[1]


def test_calibrate_stable_under_more_reps():
    a = calibrate_delta("centroid_sa", SPEC, 0.8, 4, reps_per_probe=400, master_seed=5, tol=0.02)
    b = calibrate_delta("centroid_sa", SPEC, 0.8, 4, reps_per_probe=800, master_seed=5, tol=0.02)
    assert a.bracket[0] <= a.delta_star <= a.bracket[1]
    assert abs(a.achieved_accuracy - 0.8) <= 0.02 + 3 * math.sqrt(0.08 / 400)
    # accuracy SE of ~1.4pp at 400 probes maps to roughly 10% in delta near the target
    assert abs(a.delta_star - b.delta_star) <= 0.1 * b.delta_star


def test_calibrate_bad_target():
    with pytest.raises(ValueError):
        calibrate_delta("centroid_sa", SPEC, 1.0, 4)


def test_confound_no_signal_is_chance():
    table = confound_sweep(1.0, 1.0, [0.0], 5, 5, 500, reps=200, master_seed=2)
    assert len(table.cells) == table.expected_cells == 4
    for _, rep in table.cells:
        assert abs(rep.total - 1) <= 2 * rep.se_total


def test_confound_nn_succeeds_above_threshold():
    table = confound_sweep(1.0, 2.0, [1.5], 5, 5, 2000, reps=100, master_seed=3)
    nn = table.reports(classifier="nn:k=1")[0]
    assert nn.total <= 0.2


def test_variance_check_rows():
    tmpl = replace(SPEC, delta=0.0)
    rows = variance_scaling_check([(100, 4), (200, 4)], tmpl, reps=400, master_seed=1)
    assert [(r["p"], r["nu"]) for r in rows] == [(100, 4), (200, 4)]
    for r in rows:
        assert r["ratio"] == pytest.approx(r["var"] / (r["p"] / r["nu"]))
        assert 6 < r["ratio"] < 14  # 8 + 4/(nu-1) for iid noise
    ma = variance_scaling_check([(200, 4)], replace(tmpl, noise=NoiseSpec.moving_average([1, 1])),
                                reps=400, master_seed=1)
    assert ma[0]["noise"] == "moving_average" and ma[0]["ratio"] < 40


def test_oracle_compare_paired():
    spec = ModelSpec(p=300, m=4, n=4, delta=0.2, q=1.0, pattern_mode="random_4_1")
    both = oracle_compare(spec, reps=200, master_seed=6)
    alone = oracle_compare(spec, reps=200, master_seed=6, include_oracle=False)
    assert both.first == alone.first and alone.second is None
    assert both.second.classifier_id == "lr"
    assert both.diff_total == pytest.approx(both.first.total - both.second.total)


def test_oracle_compare_preconditions():
    with pytest.raises(ValueError, match="random_4_1"):
        oracle_compare(SPEC, reps=4)
    with pytest.raises(ValueError, match="1/2"):
        oracle_compare(replace(SPEC, pattern_mode="random_4_1", delta=0.5), reps=4)


def _pool_dataset(seed=0, size=60, p=30):
    spec = ModelSpec(p=p, m=2, n=2, delta=0.5, pattern_mode="fixed", pattern=fixed_pattern(p, 0.5))
    rng = np.random.default_rng(seed)
    return Dataset.from_classes(gen_population(spec, LABEL_X, size, rng),
                                gen_population(spec, LABEL_Y, size, rng))


def test_dataset_benchmark_basic():
    ds = _pool_dataset()
    res = dataset_benchmark(ds, SplitPlan(3, 3, 10), ["centroid_sa", "lr", "svm", "always_x"],
                            reps=30, master_seed=1)
    assert "lr" in res.skipped
    assert res.reports["always_x"].per_class_error == (0.0, 1.0)
    rep = res.reports["centroid_sa"]
    assert rep.se_X == math.sqrt(rep.err_X * (1 - rep.err_X) / 30)
    assert rep.total < 1


def test_dataset_benchmark_skips_small_plans():
    res = dataset_benchmark(_pool_dataset(), SplitPlan(1, 1, 5), ["centroid", "centroid_sa"], reps=5)
    assert set(res.reports) == {"centroid"}
    assert "centroid_sa" in res.skipped


def test_dataset_benchmark_workers():
    ds = _pool_dataset()
    ids = ["centroid_sa", "nn"]
    a = dataset_benchmark(ds, SplitPlan(3, 3, 10), ids, reps=20, master_seed=4, workers=1)
    b = dataset_benchmark(ds, SplitPlan(3, 3, 10), ids, reps=20, master_seed=4, workers=2)
    assert a.reports == b.reports


def test_dataset_benchmark_plan_errors():
    with pytest.raises(ValueError, match="exceeds"):
        dataset_benchmark(_pool_dataset(size=5), SplitPlan(6, 2), ["centroid"], reps=2)


def test_ridge_singleton():
    sel = ridge_oracle_select(SPEC, [0.3], reps=40)
    assert sel.best_ridge == 0.3


def test_ridge_argmax_matches_independent_runs():
    grid = [0.01, 0.1, 1.0]
    sel = ridge_oracle_select(SPEC, grid, reps=200, master_seed=8)
    acc = {r: estimate_error(f"naive_bayes:ridge={r}", SPEC, 200, 8).accuracy for r in grid}
    best = max(grid, key=lambda r: (acc[r], -r))
    assert sel.best_ridge == best and sel.success_rate == acc[best]


def test_ridge_on_dataset():
    sel = ridge_oracle_select(_pool_dataset(), [0.01, 1.0], reps=20, plan=SplitPlan(3, 3, 10))
    assert sel.best_ridge in (0.01, 1.0)
    with pytest.raises(ValueError, match="SplitPlan"):
        ridge_oracle_select(_pool_dataset(), [0.01], reps=2)


def test_report_from_rates():
    rep = ErrorReport.from_rates(0.25, 0.5, 100, 50, seed=1, classifier_id="x", spec_digest="d")
    assert rep.total == 0.75 and rep.accuracy == 0.625 and rep.reps == 150
    assert rep.se_Y == math.sqrt(0.25 / 50)
