import math

import numpy as np
import pytest

from stochmatch.algorithms import ArrivalModel, run_known, simulate_known, solve_known
from stochmatch.graph import make_graph
from stochmatch.simulate import (RatioReport, SimConfig, SimReport, TrialError, estimate_batch, estimate_value,
                                 ratio_report, run_trials, summarize)

ONE_MINUS_INV_E = 1 - 1 / math.e


def test_constant_runner():
    rep = estimate_value(lambda rng: 1.0, SimConfig(50))
    assert rep.mean == 1.0 and rep.stderr == 0.0 and rep.ci95 == (1.0, 1.0)


def test_report_fields():
    rep = summarize([1.0, 2.0, 3.0, 6.0], seed=7)
    assert rep.trials == 4 and rep.seed == 7
    assert rep.mean == 3.0
    assert rep.stderr == pytest.approx(np.std([1, 2, 3, 6], ddof=1) / 2)
    assert rep.ci95 == pytest.approx((3 - 1.96 * rep.stderr, 3 + 1.96 * rep.stderr))


def test_single_edge_mean():
    g = make_graph([[0.5]], [[2.0]])
    sol = solve_known(g)
    rep = estimate_batch(lambda k, rng: simulate_known(g, sol, ArrivalModel.rom(), "plain", k, rng),
                         SimConfig(1_000_000))
    assert abs(rep.mean - 1.0) <= 0.004


def test_single_edge_mean_per_trial_runner():
    g = make_graph([[0.5]], [[2.0]])
    sol = solve_known(g)
    rep = estimate_value(lambda rng: run_known(g, ArrivalModel.rom(), rng=rng, solution=sol), SimConfig(20_000))
    assert abs(rep.mean - 1.0) <= 3 * rep.stderr


def test_same_config_same_report():
    runner = lambda rng: rng.random()  # noqa: E731
    cfg = SimConfig(2000, seed=5)
    assert estimate_value(runner, cfg) == estimate_value(runner, cfg)


def test_parallelism_does_not_change_values():
    g = make_graph([[0.5, 0.3], [0.4, 0.7]], [[1.0, 2.0], [3.0, 1.0]])
    sol = solve_known(g)
    runner = lambda rng: run_known(g, ArrivalModel.rom(), rng=rng, solution=sol)  # noqa: E731
    a = run_trials(runner, SimConfig(500, seed=3, parallelism=1))
    b = run_trials(runner, SimConfig(500, seed=3, parallelism=4))
    assert np.array_equal(a, b)
    batch = lambda k, rng: simulate_known(g, sol, ArrivalModel.rom(), "plain", k, rng)  # noqa: E731
    x = estimate_batch(batch, SimConfig(30_000, seed=3, parallelism=1), chunk=7000)
    y = estimate_batch(batch, SimConfig(30_000, seed=3, parallelism=3), chunk=7000)
    assert x == y


def test_stderr_shrinks_with_trials():
    ratios = []
    for rep_i in range(10):
        small = estimate_value(lambda rng: rng.exponential(), SimConfig(2000, seed=rep_i))
        big = estimate_value(lambda rng: rng.exponential(), SimConfig(4000, seed=100 + rep_i))
        ratios.append(big.stderr / small.stderr)
    assert abs(np.mean(ratios) - 1 / math.sqrt(2)) <= 0.2 / math.sqrt(2)


def test_failure_names_trial():
    def runner(rng):
        runner.calls += 1
        if runner.calls == 4:
            raise RuntimeError("boom")
        return 0.0
    runner.calls = 0
    with pytest.raises(TrialError) as info:
        run_trials(runner, SimConfig(10))
    assert info.value.index == 3


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(0)
    with pytest.raises(ValueError):
        SimConfig(10, parallelism=0)


def _rep(mean, se):
    return SimReport(mean, se, (mean - 1.96 * se, mean + 1.96 * se), 100, 0)


def test_ratio_report_cases():
    assert ratio_report(_rep(0.9, 0.0), 1.0, ONE_MINUS_INV_E).passed
    assert not ratio_report(_rep(0.5, 0.0), 1.0, ONE_MINUS_INV_E).passed
    r = ratio_report(_rep(0.632, 0.001), 1.0, ONE_MINUS_INV_E)
    assert r.passed and r.slack == pytest.approx(0.632 - ONE_MINUS_INV_E + 0.003)
    assert isinstance(r, RatioReport) and r.ratio == pytest.approx(0.632)
    with pytest.raises(ValueError):
        ratio_report(_rep(1.0, 0.0), 0.0, 0.5)
