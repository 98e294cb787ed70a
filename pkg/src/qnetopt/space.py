"""Parameter domains, configuration points, sampling, validation, encoding.

A :class:`SearchSpace` holds the configurable parameters of a study (plus a
map of fixed, non-configurable values); a :class:`ConfigPoint` is one concrete
assignment aligned with the space's parameter order.  The numeric *encoding*
feeds the regression models: continuous/integer parameters pass through as
raw values, ordinal parameters become their index in the value list, and
categorical parameters expand to a one-hot block.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError

KINDS = ("continuous", "integer", "ordinal", "categorical")
NUMERIC_KINDS = ("continuous", "integer")


@dataclass(frozen=True)
class ParamSpec:
    """One parameter domain: box bounds for numeric kinds, a value list otherwise."""

    name: str
    kind: str
    bounds: tuple = None
    values: tuple = None

    def __post_init__(self):
        if not self.name:
            raise DomainError("parameter name must be non-empty")
        if self.kind not in KINDS:
            raise DomainError(f"unknown parameter kind {self.kind!r}")
        if self.kind in NUMERIC_KINDS:
            if self.values is not None:
                raise DomainError(f"{self.name}: numeric parameters take bounds, not values")
            if self.bounds is None or len(self.bounds) != 2:
                raise DomainError(f"{self.name}: bounds must be a (min, max) pair")
            lo, hi = float(self.bounds[0]), float(self.bounds[1])
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"{self.name}: bounds must be finite")
            if not lo < hi:
                raise DomainError(f"{self.name}: need min < max, got [{lo}, {hi}]")
            object.__setattr__(self, "bounds", (lo, hi))
        else:
            if self.bounds is not None:
                raise DomainError(f"{self.name}: value-set parameters take values, not bounds")
            if not self.values:
                raise DomainError(f"{self.name}: value list must be non-empty")
            vals = tuple(self.values)
            if len(set(vals)) != len(vals):
                raise DomainError(f"{self.name}: value list entries must be unique")
            object.__setattr__(self, "values", vals)

    @property
    def low(self) -> float:
        return self.bounds[0]

    @property
    def high(self) -> float:
        return self.bounds[1]

    def encoded_width(self) -> int:
        return len(self.values) if self.kind == "categorical" else 1

    def contains(self, value) -> str:
        """Empty string when the value is in-domain, else a violation message."""
        if self.kind == "continuous":
            try:
                v = float(value)
            except (TypeError, ValueError):
                return f"{self.name}: value {value!r} is not numeric"
            if not math.isfinite(v):
                return f"{self.name}: value {v} is not finite"
            if not (self.low <= v <= self.high):
                return f"{self.name}: value {v} outside bounds [{self.low}, {self.high}]"
            return ""
        if self.kind == "integer":
            try:
                v = float(value)
            except (TypeError, ValueError):
                return f"{self.name}: value {value!r} is not numeric"
            if not math.isfinite(v):
                return f"{self.name}: value {v} is not finite"
            if v != int(v):
                return f"{self.name}: value {v} is not integral"
            if not (self.low <= v <= self.high):
                return f"{self.name}: value {v} outside bounds [{self.low}, {self.high}]"
            return ""
        if value not in self.values:
            return f"{self.name}: value {value!r} not in {self.values}"
        return ""


@dataclass(frozen=True)
class SearchSpace:
    """Ordered configurable parameters plus fixed (non-configurable) values."""

    params: tuple
    fixed: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        params = tuple(self.params)
        if not params:
            raise DomainError("a search space needs at least one parameter")
        names = [p.name for p in params] + list(self.fixed)
        if len(set(names)) != len(names):
            raise DomainError("parameter names must be unique across params and fixed")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "fixed", dict(self.fixed))

    def __len__(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple:
        return tuple(p.name for p in self.params)

    def encoded_dim(self) -> int:
        return sum(p.encoded_width() for p in self.params)

    def index_bounds(self) -> np.ndarray:
        """Per-parameter (low, high) in index space (value-set kinds map to 0..K-1)."""
        out = np.empty((len(self.params), 2))
        for i, p in enumerate(self.params):
            if p.kind in NUMERIC_KINDS:
                out[i] = (p.low, p.high)
            else:
                out[i] = (0.0, len(p.values) - 1.0)
        return out

    def to_index_array(self, point: "ConfigPoint") -> np.ndarray:
        out = np.empty(len(self.params))
        for i, (p, v) in enumerate(zip(self.params, point.values)):
            out[i] = float(v) if p.kind in NUMERIC_KINDS else p.values.index(v)
        return out

    def from_index_array(self, arr: Sequence[float]) -> "ConfigPoint":
        vals = []
        for p, a in zip(self.params, arr):
            if p.kind == "continuous":
                vals.append(float(a))
            elif p.kind == "integer":
                vals.append(int(round(a)))
            else:
                vals.append(p.values[int(round(a))])
        return ConfigPoint(tuple(vals))


@dataclass(frozen=True)
class ConfigPoint:
    """One assignment of values, aligned with SearchSpace.params."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def as_dict(self, space: SearchSpace) -> dict:
        return dict(zip(space.names, self.values))


def validate(space: SearchSpace, point: ConfigPoint) -> list:
    """Return every violated invariant (empty list means the point is valid)."""
    if len(point) != len(space.params):
        return [f"expected {len(space.params)} values, got {len(point)}"]
    violations = []
    for p, v in zip(space.params, point.values):
        msg = p.contains(v)
        if msg:
            violations.append(msg)
    return violations


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> ConfigPoint:
    """Draw each value independently and uniformly over its domain."""
    vals = []
    for p in space.params:
        if p.kind == "continuous":
            vals.append(float(rng.uniform(p.low, p.high)))
        elif p.kind == "integer":
            vals.append(int(rng.integers(int(p.low), int(p.high) + 1)))
        else:
            vals.append(p.values[int(rng.integers(0, len(p.values)))])
    return ConfigPoint(tuple(vals))


def encode(space: SearchSpace, point: ConfigPoint) -> np.ndarray:
    """Numeric feature vector for model training; fixed length per space."""
    violations = validate(space, point)
    if violations:
        raise DomainError("; ".join(violations))
    return encode_index_batch(space, space.to_index_array(point)[None, :])[0]


def encode_index_batch(space: SearchSpace, idx: np.ndarray) -> np.ndarray:
    """Vectorized encoding of an (n, n_params) index-space array."""
    n = idx.shape[0]
    X = np.zeros((n, space.encoded_dim()))
    col = 0
    for j, p in enumerate(space.params):
        if p.kind == "categorical":
            k = len(p.values)
            X[np.arange(n), col + idx[:, j].astype(np.intp)] = 1.0
            col += k
        else:
            X[:, col] = idx[:, j]
            col += 1
    return X
