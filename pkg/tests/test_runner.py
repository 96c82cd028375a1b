import numpy as np
import pytest

import matchforge.runner as runner
from matchforge.errors import AllReplicationsFailed, OneClass, SweepRunError
from matchforge.runner import common_support_level, run_confounding_experiment, run_pruning_sweep
from matchforge.scenarios import builtin_scenario, king_nielson


def test_single_run_one_row_per_method():
    res = run_pruning_sweep(builtin_scenario(1), runs=1, prune_grid=(0,), master_seed=0)
    assert [r.method for r in res.rows] == ["propensity", "mahalanobis", "odm"]
    assert all(r.runs == 1 and r.pairs_pruned == 0 and r.units_pruned == 0 for r in res.rows)


def test_rows_are_nonnegative_and_units_doubled():
    res = run_pruning_sweep(builtin_scenario(3), ("psm", "mdm"), runs=3, prune_grid=(0, 10, 30), master_seed=1)
    assert [(r.method, r.pairs_pruned) for r in res.rows][:3] == [("propensity", 0), ("propensity", 10), ("propensity", 30)]
    for r in res.rows:
        assert r.spec_variance >= 0 and r.mse >= 0
        assert r.units_pruned == 2 * r.pairs_pruned
    assert res.row("mahalanobis", 10).pairs_pruned == 10
    with pytest.raises(KeyError):
        res.row("odm", 10)


def test_sweep_deterministic_across_thread_counts():
    kw = dict(runs=6, prune_grid=(0, 20), master_seed=42)
    a = run_pruning_sweep(builtin_scenario(1), threads=1, **kw)
    b = run_pruning_sweep(builtin_scenario(1), threads=4, **kw)
    assert [vars(r) for r in a.rows] == [vars(r) for r in b.rows]


def test_noiseless_constant_effect_has_zero_mse():
    # the simple specification is correct here, so only rounding remains
    spec = king_nielson(2, [1, 1], 2.0, eta=[0, 0], sigma=0.0)
    res = run_pruning_sweep(spec, ("odm",), runs=3, prune_grid=(0,), master_seed=5)
    assert res.rows[0].mse < 1e-10
    assert res.rows[0].spec_variance >= 0


def test_pooled_variance_flag():
    kw = dict(methods=("odm",), runs=4, prune_grid=(30,), master_seed=2)
    avg = run_pruning_sweep(builtin_scenario(1), **kw)
    pooled = run_pruning_sweep(builtin_scenario(1), pool_variance=True, **kw)
    assert pooled.rows[0].spec_variance >= avg.rows[0].spec_variance - 1e-12
    assert pooled.rows[0].mean_estimate == avg.rows[0].mean_estimate


def test_without_variance_reports_nan():
    res = run_pruning_sweep(builtin_scenario(1), ("odm",), runs=2, prune_grid=(0,), with_variance=False)
    assert np.isnan(res.rows[0].spec_variance)


def test_run_errors_carry_context():
    with pytest.raises(SweepRunError, match=r"scenario 1, run 0, method propensity"):
        run_pruning_sweep(builtin_scenario(1), runs=2, prune_grid=(100,))


def test_common_support_level():
    assert common_support_level(builtin_scenario(1)) == 36
    assert common_support_level(builtin_scenario(7)) == 67  # 1 - 0.8^5 = 0.672
    assert common_support_level(builtin_scenario(9)) == 100 - 17  # keeps p + 2 pairs


@pytest.mark.slow
def test_scenario1_recovers_att_at_common_support_level():
    spec = builtin_scenario(1)
    res = run_pruning_sweep(spec, runs=100, prune_grid=(common_support_level(spec),), master_seed=9,
                            with_variance=False)
    for r in res.rows:
        assert r.mean_estimate == pytest.approx(2.0, abs=0.2)


def test_confounding_experiment_reproducible():
    a = run_confounding_experiment(200, 100, master_seed=3)
    b = run_confounding_experiment(200, 100, master_seed=3, threads=3)
    assert (a.unmatched, a.matched) == (b.unmatched, b.matched)
    assert a.unmatched_used + a.dropped[0] == 100


def test_confounding_requires_100_runs():
    with pytest.raises(ValueError):
        run_confounding_experiment(200, 99, 0)


def test_confounding_all_runs_failing(monkeypatch):
    def fail(*a, **k):
        raise OneClass("single class")

    monkeypatch.setattr(runner, "plugin_estimate", fail)
    with pytest.raises(AllReplicationsFailed):
        run_confounding_experiment(50, 100, 0)
