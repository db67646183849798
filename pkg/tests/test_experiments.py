import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rtslab.core import DistanceKind
from rtslab.engine import ConfigError, SelectionPolicy, Status
from rtslab.experiments import (W_EQUALS_MU, BudgetFormula, ExperimentSpec, Protocol, budget,
                                derive_seed, run_cell, run_grid)

WITH = SelectionPolicy.WITH_REPLACEMENT
WITHOUT = SelectionPolicy.WITHOUT_REPLACEMENT


def test_budget_values():
    assert budget(BudgetFormula.STANDARD, 32, 2, 100) == 147366
    # 100 * 16 * 32 * 100 * ln 100 = 23578471.352..., rounded up
    assert budget(BudgetFormula.ENHANCED, 32, 2, 100) == 23578472
    assert budget(BudgetFormula.UNBOUNDED, 32, 2, 100) is None
    with pytest.raises(ConfigError):
        budget(BudgetFormula.STANDARD, 0, 1, 100)


@pytest.mark.parametrize("mu,w", [(2, 2), (8, 8), (8, 20), (1, 1)])
def test_enhanced_is_ten_times_standard_when_w_covers_mu(mu, w):
    std = 10 * mu * 100 * math.log(100)
    assert budget(BudgetFormula.ENHANCED, mu, w, 100) == math.ceil(10 * std)


@given(st.integers(1, 2000), st.integers(1, 2000), st.integers(2, 500))
def test_enhanced_at_least_ten_times_standard(mu, w, n):
    assert budget(BudgetFormula.ENHANCED, mu, w, n) >= 10 * budget(BudgetFormula.STANDARD, mu, w, n) - 10


def test_derive_seed_has_no_collisions_on_grid():
    seeds = {derive_seed(12345, c, r) for c in range(200) for r in range(1000)}
    assert len(seeds) == 200_000


def test_derive_seed_depends_on_master():
    assert derive_seed(1, 0, 0) != derive_seed(2, 0, 0)
    assert derive_seed(1, 0, 1) != derive_seed(1, 1, 0)


def test_derive_seed_spreads_uniformly():
    seeds = np.array([derive_seed(7, c, r) for c in range(1000) for r in range(1000)],
                     dtype=np.uint64)
    buckets = np.bincount((seeds >> np.uint64(48)).astype(np.int64), minlength=2**16)
    assert stats.chisquare(buckets).pvalue > 0.001


def small_spec(**kw):
    base = dict(protocol=Protocol.RUNTIME_GROWTH, n=20, mu_list=(2, 4), w_list=(2, W_EQUALS_MU),
                policy=WITHOUT, runs=6, master_seed=11, budget=BudgetFormula.UNBOUNDED)
    base.update(kw)
    return ExperimentSpec(**base)


def test_cells_in_spec_order():
    cells = small_spec().cells()
    assert [(c.index, c.mu, c.w) for c in cells] == [(0, 2, 2), (1, 2, 2), (2, 4, 2), (3, 4, 4)]


def test_spec_validation():
    with pytest.raises(ConfigError):
        small_spec(runs=0)
    with pytest.raises(ConfigError):
        small_spec(mu_list=())
    with pytest.raises(ConfigError):
        small_spec(w_list=(0,))
    with pytest.raises(ConfigError):
        small_spec(protocol=Protocol.SUCCESS_RATE, budget=BudgetFormula.UNBOUNDED)


def test_stop_rules_per_protocol():
    sr = small_spec(protocol=Protocol.SUCCESS_RATE, budget=BudgetFormula.STANDARD)
    s = sr.stop_for(sr.cells()[0])
    assert s.budget == budget(BudgetFormula.STANDARD, 2, 2, 20)
    assert not s.stagnation_collapse and not s.stagnation_w_minus_1
    tk = small_spec(protocol=Protocol.TAKEOVER)
    s = tk.stop_for(tk.cells()[0])
    assert s.budget is None and s.stagnation_collapse and s.stagnation_w_minus_1
    s = small_spec(policy=WITH).stop_for(tk.cells()[0])
    assert s.stagnation_collapse and not s.stagnation_w_minus_1


def test_grid_is_deterministic_and_parallel_invariant():
    spec = small_spec()
    a = run_grid(spec, parallel=1)
    b = run_grid(spec, parallel=1)
    c = run_grid(spec, parallel=2)
    key = lambda rep: [(x.cell, [(r.seed, r.result) for r in x.records]) for x in rep.cells]  # noqa: E731
    assert key(a) == key(b) == key(c)


def test_grid_sorted_by_mu_then_w():
    spec = small_spec(mu_list=(4, 2), w_list=(W_EQUALS_MU, 2))
    rep = run_grid(spec, parallel=1)
    assert [(c.mu, c.w) for c in rep.cells] == [(2, 2), (2, 2), (4, 2), (4, 4)]
    assert rep.cell(4, 4).cell.index == 0


def test_std_zero_for_identical_seeds():
    spec = small_spec(runs=5)
    cell = spec.cells()[0]
    res = run_cell(spec, cell, seeds=[99] * 5)
    assert res.std_generations == 0.0 and res.std_min_branch_best == 0.0


def test_std_nan_for_single_run():
    spec = small_spec(runs=1)
    res = run_cell(spec, spec.cells()[0])
    assert math.isnan(res.std_generations)


def test_aggregates():
    spec = small_spec(runs=8)
    res = run_cell(spec, spec.cells()[2])
    gens = [r.result.generations for r in res.records]
    assert res.mean_generations == pytest.approx(np.mean(gens))
    assert res.std_generations == pytest.approx(np.std(gens, ddof=1))
    assert res.success_count == sum(r.result.status == Status.SUCCESS for r in res.records)
    assert [r.run_index for r in res.records] == list(range(8))
    assert [r.seed for r in res.records] == [derive_seed(11, 2, i) for i in range(8)]


def test_takeover_success_means_both_optima_found():
    spec = small_spec(protocol=Protocol.TAKEOVER, runs=20, mu_list=(2, 6), w_list=(1, 2),
                      policy=WITH)
    for cell in run_grid(spec, parallel=1).cells:
        for r in cell.records:
            res = r.result
            assert res.status in (Status.SUCCESS, Status.STAGNATION)
            if res.status == Status.SUCCESS:
                assert res.min_branch_best == 20
            else:
                assert max(res.best_branch0, res.best_branch1) == 20


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32))
def test_enhanced_never_lowers_success(mu, w, seed):
    # same seeds and a larger budget: each run's trajectory is a prefix
    # extension, so success can only be gained
    kw = dict(protocol=Protocol.SUCCESS_RATE, n=12, mu_list=(mu,), w_list=(w,), policy=WITHOUT,
              distance=DistanceKind.PHENOTYPIC, runs=10, master_seed=seed)
    std = run_grid(ExperimentSpec(budget=BudgetFormula.STANDARD, **kw), parallel=1).cells[0]
    enh = run_grid(ExperimentSpec(budget=BudgetFormula.ENHANCED, **kw), parallel=1).cells[0]
    assert enh.success_count >= std.success_count
    for a, b in zip(std.records, enh.records):
        if a.result.status == Status.SUCCESS:
            assert b.result == a.result


def test_cost_warning():
    spec = ExperimentSpec(protocol=Protocol.SUCCESS_RATE, n=100, mu_list=(32,), w_list=(2,),
                          policy=WITHOUT, runs=100, budget=BudgetFormula.ENHANCED)
    from rtslab import experiments
    with pytest.warns(RuntimeWarning, match="may need up to"):
        experiments._cost_check(spec, spec.cells()[0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        experiments._cost_check(small_spec(), small_spec().cells()[0])


def test_parallelism_env(monkeypatch):
    from rtslab.experiments import default_parallelism
    monkeypatch.setenv("RTSLAB_PARALLEL", "3")
    assert default_parallelism() == 3
    monkeypatch.delenv("RTSLAB_PARALLEL")
    assert default_parallelism() >= 1
