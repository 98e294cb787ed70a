"""Exploration-to-exploitation schedule and candidate proposal.

The transition value gamma(t, d) = (1 - ln^2(1 + t/T))^d shrinks the
truncated-normal neighborhoods around the current top configurations while
the per-cycle candidate count grows as 10 + 10^4 * t/T. ``propose`` scores
the sampled neighbors with the current model and returns the predicted-best
neighbor of each top configuration.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .space import ConfigPoint, SearchSpace, encode_index_batch

BASE_SAMPLES = 10
SAMPLE_GROWTH = 10_000


@dataclass(frozen=True)
class AcquisitionSettings:
    d: float = 4.0  # exploitation degree
    l: int = 1  # proposals per cycle
    base_samples: int = BASE_SAMPLES
    growth: int = SAMPLE_GROWTH

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"exploitation degree must be >= 1, got {self.d}")
        if self.l < 1:
            raise DomainError(f"proposals per cycle must be >= 1, got {self.l}")


def _progress(t: float, limit: float) -> float:
    if limit <= 0:
        raise DomainError(f"limit must be positive, got {limit}")
    if t < 0:
        raise DomainError(f"progress must be non-negative, got {t}")
    return min(float(t), float(limit)) / float(limit)


def transition(t: float, limit: float, d: float) -> float:
    """Neighborhood shrink factor in (0, 1]; t past the limit clamps to the limit."""
    if d < 1:
        raise DomainError(f"exploitation degree must be >= 1, got {d}")
    x = math.log(1.0 + _progress(t, limit))
    return (1.0 - x * x) ** d


def sample_count(t: float, limit: float, base: int = BASE_SAMPLES, growth: int = SAMPLE_GROWTH) -> int:
    """Candidates to score at progress t: floor(base + growth * t/T)."""
    return int(math.floor(base + growth * _progress(t, limit)))


def _trunc_normal_scalar(mu: float, sigma: float, lo: float, hi: float, rng, max_tries: int = 100) -> float:
    if sigma <= 0.0:
        return mu
    for _ in range(max_tries):
        v = rng.normal(mu, sigma)
        if lo <= v <= hi:
            return v
    return min(max(v, lo), hi)


def sample_neighbor(space: SearchSpace, center: ConfigPoint, gamma: float, rng) -> ConfigPoint:
    """One neighbor of ``center``: truncated normals per numeric/ordinal parameter,
    gamma-probability uniform resampling per categorical parameter."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    vals = []
    for p, v in zip(space.params, center.values):
        if p.kind == "continuous":
            sigma = gamma * (p.high - p.low) / 2.0
            vals.append(_trunc_normal_scalar(float(v), sigma, p.low, p.high, rng))
        elif p.kind == "integer":
            sigma = gamma * (p.high - p.low) / 2.0
            draw = _trunc_normal_scalar(float(v), sigma, p.low, p.high, rng)
            vals.append(int(min(max(np.rint(draw), p.low), p.high)))
        elif p.kind == "ordinal":
            k = len(p.values)
            mu = float(p.values.index(v))
            sigma = gamma * (k - 1) / 2.0
            draw = _trunc_normal_scalar(mu, sigma, 0.0, k - 1.0, rng)
            vals.append(p.values[int(min(max(np.rint(draw), 0), k - 1))])
        else:
            if rng.random() < gamma:
                vals.append(p.values[int(rng.integers(0, len(p.values)))])
            else:
                vals.append(v)
    return ConfigPoint(tuple(vals))


def sample_neighbors_index(
    space: SearchSpace, center_idx: np.ndarray, gamma: float, rng: np.random.Generator, count: int
) -> np.ndarray:
    """Vectorized neighbor draw in index space, one row per candidate."""
    out = np.empty((count, len(space.params)))
    bounds = space.index_bounds()
    for j, p in enumerate(space.params):
        lo, hi = bounds[j]
        mu = center_idx[j]
        if p.kind == "categorical":
            k = len(p.values)
            resample = rng.random(count) < gamma
            picks = rng.integers(0, k, size=count)
            out[:, j] = np.where(resample, picks, mu)
            continue
        sigma = gamma * (hi - lo) / 2.0
        if sigma <= 0.0:
            col = np.full(count, mu)
        else:
            col = rng.normal(mu, sigma, size=count)
            bad = (col < lo) | (col > hi)
            tries = 1
            while bad.any() and tries < 100:
                col[bad] = rng.normal(mu, sigma, size=int(bad.sum()))
                bad = (col < lo) | (col > hi)
                tries += 1
            np.clip(col, lo, hi, out=col)
        if p.kind != "continuous":
            col = np.clip(np.rint(col), lo, hi)
        out[:, j] = col
    return out


def propose(
    model,
    space: SearchSpace,
    top: list,
    t: float,
    limit: float,
    settings: AcquisitionSettings,
    rng,
) -> list:
    """Predicted-best neighbor of each top configuration, in order.

    The incoming stream is split into one sub-seed per neighborhood up front,
    so the result does not depend on evaluation order.
    """
    if not top:
        raise DomainError("need at least one top configuration to propose from")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    gamma = transition(t, limit, settings.d)
    count = sample_count(t, limit, settings.base_samples, settings.growth)
    seeds = rng.integers(0, 2**63 - 1, size=len(top))
    proposals = []
    for center, seed in zip(top, seeds):
        sub = np.random.default_rng(int(seed))
        idx = sample_neighbors_index(space, space.to_index_array(center), gamma, sub, count)
        feats = encode_index_batch(space, idx)
        pred = model.predict_batch(feats)
        best = int(np.argmax(pred.sum(axis=1)))
        proposals.append(space.from_index_array(idx[best]))
    return proposals
