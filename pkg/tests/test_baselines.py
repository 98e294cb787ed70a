import math

import numpy as np
import pytest

from qnetopt.baselines import (
    Budget,
    SaSettings,
    acceptance_probability,
    fast_temperature,
    random_search,
    simulated_annealing,
)
from qnetopt.errors import DomainError
from qnetopt.optimizer import Objective
from qnetopt.space import ParamSpec, SearchSpace, validate


class FnObjective(Objective):
    m = 1

    def __init__(self, fn):
        self.fn = fn

    def run(self, point, rng):
        return np.array([self.fn(np.asarray(point.values, dtype=float), rng)])


def box(dim, lo=0.0, hi=1.0):
    return SearchSpace(
        params=tuple(ParamSpec(f"x{i}", "continuous", bounds=(lo, hi)) for i in range(dim))
    )


def test_budget_validation():
    with pytest.raises(DomainError):
        Budget()
    with pytest.raises(DomainError):
        Budget(evaluations=3, wall_clock=1.0)
    with pytest.raises(DomainError):
        Budget(evaluations=0)


def test_random_search_budget_exact():
    obj = FnObjective(lambda x, r: float(x.sum()))
    res = random_search(box(2), obj, Budget(evaluations=1), n=2, seed=0)
    assert len(res.records) == 1
    res = random_search(box(2), obj, Budget(evaluations=17), n=2, seed=0)
    assert len(res.records) == 17
    for rec in res.records:
        assert validate(box(2), rec.config) == []


def test_random_search_indicator_oracle():
    # P(best=1) = 1 - 0.9^100 per seed for the indicator of x > 0.9
    obj = FnObjective(lambda x, r: 1.0 if x[0] > 0.9 else 0.0)
    hits = sum(
        random_search(box(1), obj, Budget(evaluations=100), n=1, seed=s).best.aggregate == 1.0
        for s in range(10)
    )
    assert hits >= 9


def test_metropolis_criterion_values():
    assert acceptance_probability(0.0, 0.5) == 1.0
    assert acceptance_probability(1.0, 0.5) == 1.0
    assert math.isclose(acceptance_probability(-1.0, 1.0), math.exp(-1.0), rel_tol=1e-12)


def test_metropolis_monte_carlo_rate():
    # delta = -T accepts with probability e^-1; 1e5 simulated decisions
    rng = np.random.default_rng(0)
    p = acceptance_probability(-0.7, 0.7)
    accepted = (rng.random(100_000) < p).mean()
    assert abs(accepted - math.exp(-1.0)) < 0.01


def test_fast_schedule_strictly_decreasing():
    temps = [fast_temperature(1.0, k) for k in range(50)]
    assert all(a > b for a, b in zip(temps, temps[1:]))
    probs = [acceptance_probability(-0.3, t) for t in temps]
    assert all(a > b for a, b in zip(probs, probs[1:]))


def test_sa_settings_validation():
    with pytest.raises(DomainError):
        SaSettings(t0=0.0)
    with pytest.raises(DomainError):
        SaSettings(neighbor_scale=0.0)
    with pytest.raises(DomainError):
        simulated_annealing(box(1), FnObjective(lambda x, r: 0.0), Budget(evaluations=1), n=1)


def test_sa_budget_and_best_tracking():
    obj = FnObjective(lambda x, r: float(-((x - 0.5) ** 2).sum()))
    res = simulated_annealing(box(2), obj, Budget(evaluations=40), n=1, seed=5)
    assert len(res.records) == 40
    assert res.best.aggregate == max(r.aggregate for r in res.records)
    for rec in res.records:
        assert validate(box(2), rec.config) == []


def test_sa_sphere_statistical_oracle():
    # maximize -sum((x - 0.3)^2) in 3 dims with 2000 evaluations
    obj = FnObjective(lambda x, r: float(-((x - 0.3) ** 2).sum()))
    good = 0
    for seed in range(10):
        res = simulated_annealing(
            box(3), obj, Budget(evaluations=2000), n=1, sa=SaSettings(t0=1.0), seed=seed
        )
        good += res.best.aggregate >= -1e-2
    assert good >= 8
