import time

import numpy as np
import pytest

from qnetopt.errors import DomainError, EvaluationError
from qnetopt.forest import RfSettings
from qnetopt.optimizer import Limit, Objective, RunSettings, evaluate, run
from qnetopt.space import ConfigPoint, ParamSpec, SearchSpace, validate
from qnetopt.synthetic import SphereObjective


class VectorObjective(Objective):
    def __init__(self, fn, m):
        self.fn = fn
        self.m = m

    def run(self, point, rng):
        return self.fn(point, rng)


def test_evaluate_deterministic_objective():
    obj = VectorObjective(lambda p, r: np.array([2.0, 3.0]), m=2)
    for n in (1, 7):
        rec = evaluate(obj, ConfigPoint((0.0,)), n, rng=0)
        assert rec.mean_utilities.tolist() == [2.0, 3.0]
        assert rec.sample_count == n
        assert np.array_equal(rec.raw_samples.mean(axis=0), rec.mean_utilities)


def test_evaluate_uniform_clt_bound():
    obj = VectorObjective(lambda p, r: r.random(2), m=2)
    rec = evaluate(obj, ConfigPoint((0.0,)), 10_000, rng=1)
    assert np.all(np.abs(rec.mean_utilities - 0.5) < 0.02)


def test_evaluate_single_run_equals_sample():
    obj = VectorObjective(lambda p, r: np.array([r.normal()]), m=1)
    rec = evaluate(obj, ConfigPoint((0.0,)), 1, rng=3)
    assert rec.mean_utilities[0] == rec.raw_samples[0, 0]


def test_evaluate_wraps_failures():
    def boom(point, rng):
        raise RuntimeError("sim crashed")

    with pytest.raises(EvaluationError) as err:
        evaluate(VectorObjective(boom, 1), ConfigPoint((1.0,)), 3, rng=0)
    assert err.value.config is not None
    assert err.value.run_index >= 0


def test_evaluate_rejects_wrong_arity():
    obj = VectorObjective(lambda p, r: np.array([1.0, 2.0]), m=3)
    with pytest.raises(EvaluationError):
        evaluate(obj, ConfigPoint((0.0,)), 2, rng=0)


def test_run_attaches_partial_records_on_failure():
    calls = {"n": 0}

    def flaky(point, rng):
        calls["n"] += 1
        if calls["n"] > 4:
            raise RuntimeError("simulator died")
        return np.array([1.0])

    with pytest.raises(EvaluationError) as err:
        run(default_space(), VectorObjective(flaky, 1), quick_settings(cycles=5))
    assert len(err.value.partial_records) == 1  # n=3 runs per eval: second eval dies


def default_space(dim=2):
    return SearchSpace(
        params=tuple(ParamSpec(f"x{i}", "continuous", bounds=(0.0, 1.0)) for i in range(dim))
    )


def quick_settings(cycles=4, seed=0, workers=1):
    return RunSettings(
        limit=Limit(cycles=cycles),
        n=3,
        l=2,
        k0=3,
        d=2.0,
        seed=seed,
        workers=workers,
        rf=RfSettings(n_trees=10),
    )


def noisy_parabola():
    return VectorObjective(
        lambda p, r: np.array([-sum((v - 0.5) ** 2 for v in p.values) + r.normal(0, 0.01)]), m=1
    )


def test_run_dataset_size_follows_cycles():
    res = run(default_space(), noisy_parabola(), quick_settings(cycles=4))
    assert len(res.records) == 3 + 4 * 2  # k0 + cycles * l
    for t, rec in enumerate(res.records):
        assert validate(default_space(), rec.config) == []
    assert [s.dataset_size for s in res.cycle_stats] == [3, 5, 7, 9, 11]


def test_run_best_aggregate_non_decreasing():
    res = run(default_space(), noisy_parabola(), quick_settings(cycles=6, seed=3))
    bests = [s.best_aggregate for s in res.cycle_stats]
    assert all(a <= b + 1e-15 for a, b in zip(bests, bests[1:]))
    assert res.best.aggregate == max(r.aggregate for r in res.records)


def test_run_reproducible_and_worker_invariant():
    space = default_space()
    a = run(space, noisy_parabola(), quick_settings(cycles=3, seed=11))
    b = run(space, noisy_parabola(), quick_settings(cycles=3, seed=11))
    c = run(space, noisy_parabola(), quick_settings(cycles=3, seed=11, workers=8))
    for other in (b, c):
        assert len(other.records) == len(a.records)
        for ra, rb in zip(a.records, other.records):
            assert ra.config.values == rb.config.values
            assert np.array_equal(ra.mean_utilities, rb.mean_utilities)
            assert ra.cycle == rb.cycle


def test_run_zero_cycles_returns_initial_design():
    res = run(default_space(), noisy_parabola(), quick_settings(cycles=0))
    assert len(res.records) == 3
    assert not res.truncated


def test_run_wall_clock_truncation_flag():
    obj = VectorObjective(lambda p, r: (time.sleep(0.02), np.array([0.0]))[1], m=1)
    settings = RunSettings(
        limit=Limit(wall_clock=0.01), n=2, l=2, k0=2, seed=0, rf=RfSettings(n_trees=5)
    )
    res = run(default_space(), obj, settings)
    assert res.truncated
    assert len(res.records) == 2  # cycle 0 only


def test_run_sphere_statistical_oracle():
    # known optimum 0 for the noisy sphere; 40 cycles with l=5 must come
    # within 0.05 on at least 8 of 10 seeds
    obj = SphereObjective(dim=5, noise=0.01)
    space = obj.space()
    good = 0
    for seed in range(10):
        settings = RunSettings(
            limit=Limit(cycles=40), n=5, l=5, d=4.0, seed=seed, rf=RfSettings(n_trees=40)
        )
        res = run(space, obj, settings)
        good += res.best.aggregate >= -0.05
    assert good >= 8


def test_timing_profile_sleep_objective():
    obj = VectorObjective(lambda p, r: (time.sleep(0.05), np.array([r.normal()]))[1], m=1)
    settings = RunSettings(
        limit=Limit(cycles=2), n=2, l=2, k0=3, seed=1, rf=RfSettings(n_trees=20)
    )
    res = run(default_space(), obj, settings)
    fr = res.profile.fractions()
    assert abs(sum(fr.values()) - 1.0) < 1e-6
    assert fr["simulation"] > 0.8
    assert res.profile.cycles_completed == 2


def test_raw_sample_cap():
    obj = noisy_parabola()
    settings = RunSettings(
        limit=Limit(cycles=2), n=4, l=2, k0=2, seed=0, raw_cap=10, rf=RfSettings(n_trees=5)
    )
    res = run(default_space(), obj, settings)
    kept = [r.raw_samples is not None for r in res.records]
    assert kept == [True, True, False, False, False, False]
    for rec in res.records[:2]:
        assert np.array_equal(rec.raw_samples.mean(axis=0), rec.mean_utilities)


def test_settings_validation():
    with pytest.raises(DomainError):
        RunSettings(limit=Limit(cycles=2), n=0)
    with pytest.raises(DomainError):
        Limit(cycles=2, wall_clock=5.0)
    with pytest.raises(DomainError):
        Limit()
    assert RunSettings(limit=Limit(cycles=1), l=3).resolved_k0 == 3
