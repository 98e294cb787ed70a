"""The surrogate-assisted optimization cycle.

Cycle 0 evaluates k0 uniformly sampled configurations with n stochastic runs
each; every later cycle trains/selects a model on the accumulated records,
proposes neighbors of the l best configurations, evaluates them, and appends.
Wall time is attributed to simulation / training / acquisition / remaining.

Seeding: a master seed derives (phase, cycle, proposal, run) sub-streams via
``numpy.random.SeedSequence`` spawn keys, so the record set is identical for
any worker count and bit-reproducible for a fixed seed and cycle limit.
"""

import logging
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .acquisition import AcquisitionSettings, propose, sample_count, transition
from .errors import DomainError, EvaluationError, InsufficientDataError
from .forest import RfSettings
from .models import Dataset, select_model, train_rf
from .space import ConfigPoint, SearchSpace, encode, sample_uniform
from .svr import SvrSettings

log = logging.getLogger(__name__)

# phase tags for seed derivation
_PHASE_SAMPLE = 0
_PHASE_RUN = 1
_PHASE_MODEL = 2
_PHASE_PROPOSE = 3


class Objective(ABC):
    """A stochastic simulator: one run maps a configuration to m utilities."""

    m: int = 1
    t_sim: Optional[float] = None

    @abstractmethod
    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        """One seeded simulation run; returns m finite per-objective utilities."""


@dataclass(frozen=True)
class Limit:
    """Either a cycle count or a wall-clock budget in seconds."""

    cycles: Optional[int] = None
    wall_clock: Optional[float] = None

    def __post_init__(self):
        if (self.cycles is None) == (self.wall_clock is None):
            raise DomainError("specify exactly one of cycles or wall_clock")
        if self.cycles is not None and self.cycles < 0:
            raise DomainError("cycle limit must be >= 0")
        if self.wall_clock is not None and self.wall_clock <= 0:
            raise DomainError("wall-clock limit must be positive")


@dataclass(frozen=True)
class RunSettings:
    limit: Limit = Limit(cycles=10)
    n: int = 20  # simulation runs per evaluation
    l: Optional[int] = None  # proposals per cycle; defaults to workers
    d: float = 4.0
    k0: Optional[int] = None  # initial configs; defaults to l
    seed: int = 0
    workers: int = 1
    keep_raw: bool = True
    raw_cap: int = 1_000_000  # total raw sample entries retained across the run
    rf: RfSettings = field(default_factory=RfSettings)
    svr: SvrSettings = field(default_factory=SvrSettings)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")
        if self.l is not None and self.l < 1:
            raise DomainError("l must be >= 1")
        if self.k0 is not None and self.k0 < 1:
            raise DomainError("k0 must be >= 1")

    @property
    def resolved_l(self) -> int:
        return self.l if self.l is not None else self.workers

    @property
    def resolved_k0(self) -> int:
        return self.k0 if self.k0 is not None else self.resolved_l


@dataclass
class EvalRecord:
    config: ConfigPoint
    mean_utilities: np.ndarray
    sample_count: int
    raw_samples: Optional[np.ndarray]
    cycle: int

    @property
    def aggregate(self) -> float:
        return float(self.mean_utilities.sum())


@dataclass
class TimingProfile:
    simulation: float
    training: float
    acquisition: float
    remaining: float
    cycles_completed: int

    @property
    def total(self) -> float:
        return self.simulation + self.training + self.acquisition + self.remaining

    def fractions(self) -> dict:
        total = self.total
        if total <= 0.0:
            return {"simulation": 1.0, "training": 0.0, "acquisition": 0.0, "remaining": 0.0}
        return {
            "simulation": self.simulation / total,
            "training": self.training / total,
            "acquisition": self.acquisition / total,
            "remaining": self.remaining / total,
        }


@dataclass
class CycleStats:
    cycle: int
    dataset_size: int
    best_aggregate: float
    model_kind: Optional[str]
    cv_mae_rf: Optional[float]
    cv_mae_svr: Optional[float]
    gamma: Optional[float]
    samples_scored: Optional[int]


@dataclass
class OptimizationResult:
    records: list
    best: EvalRecord
    profile: TimingProfile
    cycle_stats: list
    seed: int
    method: str = "surrogate"
    truncated: bool = False
    final_model: object = None  # last selected TrainedModel, when one was trained

    @property
    def dataset(self) -> list:
        return self.records


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-style split: a generator keyed by (phase, cycle, index, run)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def _one_run(objective: Objective, config: ConfigPoint, rng, run_index: int) -> np.ndarray:
    try:
        out = np.asarray(objective.run(config, rng), dtype=np.float64).reshape(-1)
    except Exception as exc:
        if isinstance(exc, EvaluationError):
            raise
        raise EvaluationError(
            f"objective run {run_index} failed for {tuple(config.values)}: {exc}",
            config=config,
            run_index=run_index,
        ) from exc
    if out.shape[0] != objective.m:
        raise EvaluationError(
            f"objective returned {out.shape[0]} values, declared m={objective.m}",
            config=config,
            run_index=run_index,
        )
    if not np.isfinite(out).all():
        raise EvaluationError(
            f"objective run {run_index} returned non-finite utilities",
            config=config,
            run_index=run_index,
        )
    return out


def evaluate(
    objective: Objective,
    config: ConfigPoint,
    n: int,
    rng=None,
    run_seeds=None,
    executor: Optional[ThreadPoolExecutor] = None,
    keep_raw: bool = True,
    cycle: int = -1,
) -> EvalRecord:
    """n independent seeded runs; per-objective sample means.

    Run seeds are fixed before dispatch, so the record is identical whether
    the runs execute serially or on a worker pool.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if run_seeds is None:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        run_seeds = [int(s) for s in gen.integers(0, 2**63 - 1, size=n)]
    if len(run_seeds) != n:
        raise DomainError(f"need {n} run seeds, got {len(run_seeds)}")
    samples = np.empty((n, objective.m))
    if executor is None:
        for i in range(n):
            samples[i] = _one_run(objective, config, np.random.default_rng(run_seeds[i]), i)
    else:
        futures = [
            executor.submit(_one_run, objective, config, np.random.default_rng(run_seeds[i]), i)
            for i in range(n)
        ]
        for i, fut in enumerate(futures):
            samples[i] = fut.result()
    return EvalRecord(
        config=config,
        mean_utilities=samples.mean(axis=0),
        sample_count=n,
        raw_samples=samples if keep_raw else None,
        cycle=cycle,
    )


def _evaluate_batch(objective, configs, n, seed, cycle, executor, raw_budget, out_records):
    """Evaluate one cycle's proposals, appending to out_records as each record
    completes (a mid-batch failure keeps the finished ones); returns raw spent."""
    spent = 0
    for prop_index, config in enumerate(configs):
        run_seeds = [
            np.random.SeedSequence(entropy=seed, spawn_key=(_PHASE_RUN, cycle, prop_index, r))
            for r in range(n)
        ]
        keep = raw_budget - spent >= n * objective.m
        rec = evaluate(
            objective, config, n, run_seeds=run_seeds, executor=executor, keep_raw=keep, cycle=cycle
        )
        if keep:
            spent += n * objective.m
        out_records.append(rec)
    return spent


def _top_configs(records, l):
    aggs = np.array([r.aggregate for r in records])
    order = np.argsort(-aggs, kind="stable")
    return [records[i].config for i in order[:l]]


def run(space: SearchSpace, objective: Objective, settings: RunSettings) -> OptimizationResult:
    """Full surrogate loop; see the module docstring for the cycle layout."""
    seed = settings.seed
    n = settings.n
    l = settings.resolved_l
    k0 = settings.resolved_k0
    acq = AcquisitionSettings(d=settings.d, l=l)
    t_start = time.perf_counter()
    sim_t = train_t = acq_t = 0.0
    executor = ThreadPoolExecutor(max_workers=settings.workers) if settings.workers > 1 else None
    records = []
    cycle_stats = []
    raw_budget = settings.raw_cap if settings.keep_raw else 0
    truncated = False
    model = None

    def elapsed():
        return time.perf_counter() - t_start

    try:
        init_configs = []
        for i in range(k0):
            point = sample_uniform(space, child_rng(seed, _PHASE_SAMPLE, 0, i))
            init_configs.append(point)
        t0 = time.perf_counter()
        raw_budget -= _evaluate_batch(
            objective, init_configs, n, seed, 0, executor, raw_budget, records
        )
        sim_t += time.perf_counter() - t0
        best_agg = max(r.aggregate for r in records)
        cycle_stats.append(CycleStats(0, len(records), best_agg, None, None, None, None, None))
        log.info("cycle 0: dataset=%d best=%.6g (initial design)", len(records), best_agg)

        cycles = settings.limit.cycles
        wall = settings.limit.wall_clock
        if wall is not None and elapsed() >= wall:
            truncated = True

        t = 0
        while True:
            t += 1
            if cycles is not None and t > cycles:
                break
            if wall is not None and elapsed() >= wall:
                break
            prog_t, prog_limit = (t, cycles) if cycles is not None else (min(elapsed(), wall), wall)

            t0 = time.perf_counter()
            X = np.vstack([encode(space, r.config) for r in records])
            Y = np.vstack([r.mean_utilities for r in records])
            data = Dataset(X, Y)
            model_rng = child_rng(seed, _PHASE_MODEL, t, 0)
            try:
                model = select_model(
                    data, rng=model_rng, rf_settings=settings.rf, svr_settings=settings.svr
                )
            except InsufficientDataError:
                model = train_rf(data, settings.rf, model_rng)
                model.metadata["cv_mae"] = {}
            train_t += time.perf_counter() - t0

            t0 = time.perf_counter()
            tops = _top_configs(records, l)
            proposals = propose(
                model, space, tops, prog_t, prog_limit, acq, child_rng(seed, _PHASE_PROPOSE, t, 0)
            )
            acq_t += time.perf_counter() - t0

            t0 = time.perf_counter()
            raw_budget -= _evaluate_batch(
                objective, proposals, n, seed, t, executor, raw_budget, records
            )
            sim_t += time.perf_counter() - t0

            best_agg = max(best_agg, *(r.aggregate for r in records[-len(proposals) :]))
            cv = model.metadata.get("cv_mae", {})
            gamma = transition(prog_t, prog_limit, settings.d)
            stats = CycleStats(
                cycle=t,
                dataset_size=len(records),
                best_aggregate=best_agg,
                model_kind=model.kind,
                cv_mae_rf=cv.get("random-forest"),
                cv_mae_svr=cv.get("support-vector"),
                gamma=gamma,
                samples_scored=sample_count(prog_t, prog_limit),
            )
            cycle_stats.append(stats)
            log.info(
                "cycle %d: dataset=%d best=%.6g model=%s cv_rf=%s cv_svr=%s",
                t,
                len(records),
                best_agg,
                model.kind,
                stats.cv_mae_rf,
                stats.cv_mae_svr,
            )
    except EvaluationError as exc:
        exc.partial_records = records  # lets callers flush what completed
        raise
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    total = elapsed()
    remaining = max(total - sim_t - train_t - acq_t, 0.0)
    profile = TimingProfile(sim_t, train_t, acq_t, remaining, cycles_completed=len(cycle_stats) - 1)
    aggs = np.array([r.aggregate for r in records])
    best = records[int(np.argmax(aggs))]
    return OptimizationResult(
        records=records,
        best=best,
        profile=profile,
        cycle_stats=cycle_stats,
        seed=seed,
        method="surrogate",
        truncated=truncated,
        final_model=model,
    )
