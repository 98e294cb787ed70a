"""Budget-matched baselines: uniform random search and simulated annealing.

Both run over the same SearchSpace/Objective contract as the surrogate loop
and return the same record format, so study outputs are directly comparable.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .acquisition import sample_neighbor
from .errors import DomainError, EvaluationError
from .optimizer import (
    _PHASE_RUN,
    _PHASE_SAMPLE,
    CycleStats,
    Objective,
    OptimizationResult,
    TimingProfile,
    child_rng,
    evaluate,
)
from .space import SearchSpace, sample_uniform


@dataclass(frozen=True)
class Budget:
    """Either a total evaluation count or a wall-clock budget in seconds."""

    evaluations: Optional[int] = None
    wall_clock: Optional[float] = None

    def __post_init__(self):
        if (self.evaluations is None) == (self.wall_clock is None):
            raise DomainError("specify exactly one of evaluations or wall_clock")
        if self.evaluations is not None and self.evaluations < 1:
            raise DomainError("evaluation budget must be >= 1")
        if self.wall_clock is not None and self.wall_clock <= 0:
            raise DomainError("wall-clock budget must be positive")


@dataclass(frozen=True)
class SaSettings:
    t0: float = 1.0  # initial temperature; fast schedule T_k = t0 / (k + 1)
    neighbor_scale: float = 0.1  # fixed gamma for the truncated-normal move kernel
    seed: Optional[int] = None

    def __post_init__(self):
        if self.t0 <= 0:
            raise DomainError("initial temperature must be positive")
        if not (0 < self.neighbor_scale <= 1):
            raise DomainError("neighbor_scale must be in (0, 1]")


def fast_temperature(t0: float, k: int) -> float:
    return t0 / (k + 1)


def acceptance_probability(delta_u: float, temperature: float) -> float:
    """Metropolis criterion for a maximization move."""
    if delta_u >= 0:
        return 1.0
    return math.exp(delta_u / temperature)


def _run_seeds(seed, eval_index, n):
    return [
        np.random.SeedSequence(entropy=seed, spawn_key=(_PHASE_RUN, 0, eval_index, r))
        for r in range(n)
    ]


def _finish(records, sim_t, total, seed, method):
    remaining = max(total - sim_t, 0.0)
    profile = TimingProfile(sim_t, 0.0, 0.0, remaining, cycles_completed=len(records))
    aggs = np.array([r.aggregate for r in records])
    best = records[int(np.argmax(aggs))]
    stats = [
        CycleStats(r.cycle, i + 1, float(aggs[: i + 1].max()), None, None, None, None, None)
        for i, r in enumerate(records)
    ]
    return OptimizationResult(
        records=records, best=best, profile=profile, cycle_stats=stats, seed=seed, method=method
    )


def random_search(
    space: SearchSpace,
    objective: Objective,
    budget: Budget,
    n: int = 20,
    seed: int = 0,
    workers: int = 1,
    keep_raw: bool = False,
) -> OptimizationResult:
    """Uniform sampling of the search domain; tracks the best aggregate."""
    t_start = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    records = []
    sim_t = 0.0
    try:
        i = 0
        while True:
            if budget.evaluations is not None and i >= budget.evaluations:
                break
            if budget.wall_clock is not None and (
                time.perf_counter() - t_start >= budget.wall_clock and i >= 1
            ):
                break
            config = sample_uniform(space, child_rng(seed, _PHASE_SAMPLE, 0, i))
            t0 = time.perf_counter()
            rec = evaluate(
                objective,
                config,
                n,
                run_seeds=_run_seeds(seed, i, n),
                executor=executor,
                keep_raw=keep_raw,
                cycle=i,
            )
            sim_t += time.perf_counter() - t0
            records.append(rec)
            i += 1
    except EvaluationError as exc:
        exc.partial_records = records
        raise
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return _finish(records, sim_t, time.perf_counter() - t_start, seed, "random")


def simulated_annealing(
    space: SearchSpace,
    objective: Objective,
    budget: Budget,
    n: int = 20,
    sa: SaSettings = SaSettings(),
    seed: int = 0,
    workers: int = 1,
    keep_raw: bool = False,
) -> OptimizationResult:
    """Metropolis search with the fast schedule T_k = T0/(k+1).

    The move kernel reuses the truncated-normal neighbor sampler at the fixed
    scale ``sa.neighbor_scale``. All evaluated configurations (accepted or
    not) enter the record set; the global best is reported.
    """
    if budget.evaluations is not None and budget.evaluations < 2:
        raise DomainError("simulated annealing needs a budget of at least 2 evaluations")
    if sa.seed is not None:
        seed = sa.seed
    t_start = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    chain = child_rng(seed, _PHASE_SAMPLE, 1, 0)
    records = []
    sim_t = 0.0

    def timed_eval(config, idx):
        nonlocal sim_t
        t0 = time.perf_counter()
        rec = evaluate(
            objective,
            config,
            n,
            run_seeds=_run_seeds(seed, idx, n),
            executor=executor,
            keep_raw=keep_raw,
            cycle=idx,
        )
        sim_t += time.perf_counter() - t0
        records.append(rec)
        return rec

    try:
        current = timed_eval(sample_uniform(space, child_rng(seed, _PHASE_SAMPLE, 0, 0)), 0)
        evals = 1
        k = 0
        while True:
            if budget.evaluations is not None and evals >= budget.evaluations:
                break
            if budget.wall_clock is not None and time.perf_counter() - t_start >= budget.wall_clock:
                break
            proposal = sample_neighbor(space, current.config, sa.neighbor_scale, chain)
            candidate = timed_eval(proposal, evals)
            evals += 1
            delta = candidate.aggregate - current.aggregate
            temp = fast_temperature(sa.t0, k)
            if chain.random() < acceptance_probability(delta, temp):
                current = candidate
            k += 1
    except EvaluationError as exc:
        exc.partial_records = records
        raise
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    result = _finish(records, sim_t, time.perf_counter() - t_start, seed, "annealing")
    assert result.best.aggregate >= current.aggregate
    return result
