"""Dominating-set extraction and per-parameter distribution summaries.

A record is dominated when some other record is at least as good in every
objective and strictly better in one; the dominating set keeps everything
else (duplicates of a non-dominated vector all stay). Parameter spreads over
the dominating set are summarized by median, 2.5/97.5 percentiles, standard
deviation, and Kolmogorov-Smirnov distances against a uniform reference over
the parameter bounds and a normal reference with sample moments
(Lilliefors-style). Categorical parameters have no order, so they are listed
in the report metadata instead of summarized.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, DomainError, EmptyReportError
from .space import SearchSpace

_CHUNK = 256


def dominating_set(records) -> np.ndarray:
    """Indices of the non-dominated objective vectors, ascending."""
    U = np.asarray(records, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2:
        raise DomainError("objective records must form an (n, m) array")
    n = U.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    dominated = np.zeros(n, dtype=bool)
    for lo in range(0, n, _CHUNK):
        block = U[lo : lo + _CHUNK]
        ge = (U[None, :, :] >= block[:, None, :]).all(axis=2)
        gt = (U[None, :, :] > block[:, None, :]).any(axis=2)
        dominated[lo : lo + _CHUNK] = (ge & gt).any(axis=1)
    return np.flatnonzero(~dominated).astype(np.int64)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in z])


def ks_distance(values, reference: str, bounds=None) -> float:
    """Two-sided KS statistic of a sample against a reference distribution.

    reference 'uniform' needs bounds=(low, high); 'normal' uses the sample
    mean and standard deviation (ddof=1).
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.shape[0]
    if n < 2:
        raise DegenerateSampleError(f"need at least 2 values, got {n}")
    if reference == "uniform":
        if bounds is None:
            raise DomainError("uniform reference needs bounds")
        lo, hi = float(bounds[0]), float(bounds[1])
        if not lo < hi:
            raise DomainError(f"need low < high, got [{lo}, {hi}]")
        cdf = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    elif reference == "normal":
        if x[0] == x[-1]:
            raise DegenerateSampleError("zero variance: normal reference is degenerate")
        mu = x.mean()
        sd = x.std(ddof=1)
        cdf = _normal_cdf((x - mu) / sd)
    else:
        raise DomainError(f"unknown reference {reference!r}")
    i = np.arange(1, n + 1)
    d_plus = (i / n - cdf).max()
    d_minus = (cdf - (i - 1) / n).max()
    return float(max(d_plus, d_minus))


@dataclass(frozen=True)
class ParamSummary:
    median: float
    p2_5: float
    p97_5: float
    std: float
    ks_uniform: float
    ks_normal: float
    closer_to_uniform: bool


@dataclass(frozen=True)
class ParetoReport:
    dominating_indices: tuple
    summaries: dict
    dominating_fraction: float
    metadata: dict = field(default_factory=dict)


def summarize(records, space: SearchSpace) -> ParetoReport:
    """Dominating-set membership plus per-parameter spread statistics.

    ``records`` are EvalRecord-like objects exposing ``config`` and
    ``mean_utilities``; ordinal parameters are summarized on their index
    scale. KS values are NaN when the dominating set is a single point or
    (for the normal reference) has zero variance.
    """
    records = list(records)
    if not records:
        raise EmptyReportError("no records to summarize")
    utilities = np.vstack([r.mean_utilities for r in records])
    dom = dominating_set(utilities)
    if dom.size == 0:  # unreachable for non-empty input; kept as a guard
        raise EmptyReportError("empty dominating set")
    configs = np.vstack([space.to_index_array(records[i].config) for i in dom])
    summaries = {}
    skipped = []
    for j, p in enumerate(space.params):
        if p.kind == "categorical":
            skipped.append(p.name)
            continue
        vals = configs[:, j]
        if p.kind in ("continuous", "integer"):
            bounds = (p.low, p.high)
        else:
            bounds = (0.0, len(p.values) - 1.0)
        identical = bool(np.all(vals == vals[0]))
        std = float(vals.std(ddof=1)) if vals.shape[0] > 1 and not identical else 0.0
        try:
            ks_u = ks_distance(vals, "uniform", bounds=bounds)
        except DegenerateSampleError:
            ks_u = float("nan")
        try:
            ks_n = ks_distance(vals, "normal")
        except DegenerateSampleError:
            ks_n = float("nan")
        closer = bool(np.isfinite(ks_u) and np.isfinite(ks_n) and ks_u < ks_n)
        summaries[p.name] = ParamSummary(
            median=float(np.median(vals)),
            p2_5=float(np.percentile(vals, 2.5)),
            p97_5=float(np.percentile(vals, 97.5)),
            std=std,
            ks_uniform=ks_u,
            ks_normal=ks_n,
            closer_to_uniform=closer,
        )
    return ParetoReport(
        dominating_indices=tuple(int(i) for i in dom),
        summaries=summaries,
        dominating_fraction=float(dom.size) / len(records),
        metadata={
            "normal_reference": "sample moments, ddof=1",
            "percentile_method": "linear interpolation",
            "categorical_skipped": skipped,
        },
    )
