"""Synthetic stochastic objectives for benchmarking the search methods."""

import numpy as np

from .optimizer import Objective
from .space import ConfigPoint, ParamSpec, SearchSpace


def _box_space(prefix: str, dim: int, low: float, high: float) -> SearchSpace:
    return SearchSpace(
        params=tuple(
            ParamSpec(name=f"{prefix}{i}", kind="continuous", bounds=(low, high))
            for i in range(dim)
        )
    )


class SphereObjective(Objective):
    """-sum((x - center)^2) plus Gaussian noise; optimum 0 at x = center."""

    m = 1

    def __init__(self, dim: int = 5, center: float = 0.5, noise: float = 0.01, bounds=(0.0, 1.0)):
        self.dim = dim
        self.center = center
        self.noise = noise
        self.bounds = bounds

    def space(self) -> SearchSpace:
        return _box_space("x", self.dim, *self.bounds)

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(point.values, dtype=np.float64)
        val = -float(((x - self.center) ** 2).sum())
        if self.noise:
            val += float(rng.normal(0.0, self.noise))
        return np.array([val])


class RosenbrockObjective(Objective):
    """Negated Rosenbrock valley plus noise; optimum 0 at the all-ones point."""

    m = 1

    def __init__(self, dim: int = 10, noise: float = 0.01, bounds=(-2.0, 2.0)):
        self.dim = dim
        self.noise = noise
        self.bounds = bounds

    def space(self) -> SearchSpace:
        return _box_space("x", self.dim, *self.bounds)

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(point.values, dtype=np.float64)
        val = -float((100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2).sum())
        if self.noise:
            val += float(rng.normal(0.0, self.noise))
        return np.array([val])
