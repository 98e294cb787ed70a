"""Budgeted memory-allocation objective with a pluggable request model.

The score of an allocation q is the per-node completed-request count summed
over nodes, minus a scalar penalty max(0, sum(q) - budget). Request models
are pluggable: a built-in stochastic toy model for desk-scale testing, or an
external process speaking the line protocol documented in
docs/wire-protocol.md (one JSON object in, one JSON array out).
"""

import json
import subprocess
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExternalObjectiveError
from .optimizer import Objective
from .space import ConfigPoint, ParamSpec, SearchSpace

DEFAULT_BUDGET = 450
DEFAULT_NODES = 9
DEFAULT_CAPACITY = 128

# Fixed 9-node metro-style toy topology: node 1 is the exchange hub.
TOY_METRO_EDGES = ((0, 1), (1, 2), (2, 3), (1, 4), (4, 5), (1, 6), (6, 7), (6, 8))


@dataclass(frozen=True)
class AllocationProblem:
    budget: int = DEFAULT_BUDGET
    capacities: tuple = (DEFAULT_CAPACITY,) * DEFAULT_NODES

    def __post_init__(self):
        caps = tuple(int(c) for c in self.capacities)
        if self.budget <= 0:
            raise DomainError("budget must be positive")
        if not caps or any(c < 0 for c in caps):
            raise DomainError("capacities must be non-negative")
        object.__setattr__(self, "capacities", caps)

    @property
    def n_nodes(self) -> int:
        return len(self.capacities)

    def check(self, q) -> np.ndarray:
        arr = np.asarray(q, dtype=np.float64)
        if arr.shape != (self.n_nodes,):
            raise DomainError(f"allocation must have length {self.n_nodes}")
        for i, (qi, ci) in enumerate(zip(arr, self.capacities)):
            if qi < 0 or qi > ci:
                raise DomainError(f"allocation q_{i}={qi} outside [0, {ci}]")
        return arr


def penalty(q, budget: float, capacities=None) -> float:
    """Scalar budget penalty max(0, sum(q) - budget)."""
    arr = np.asarray(q, dtype=np.float64)
    if capacities is not None:
        AllocationProblem(budget=int(budget), capacities=tuple(capacities)).check(arr)
    elif (arr < 0).any():
        raise DomainError("allocations must be non-negative")
    return float(max(0.0, arr.sum() - budget))


def _toy_degrees() -> np.ndarray:
    deg = np.zeros(DEFAULT_NODES, dtype=np.int64)
    for a, b in TOY_METRO_EDGES:
        deg[a] += 1
        deg[b] += 1
    return deg


def toy_request_model(q, rng, scale: float = 8.0) -> np.ndarray:
    """Desk-scale stand-in for a full request-serving stack.

    Node i completes Poisson(scale * w_i * log1p(q_i)) requests, where
    w_i = degree_i^2 weights the fixed toy topology's hubs. Concave and
    monotone in every q_i; seeded and reproducible. Not calibrated to any
    measured request counts.
    """
    arr = np.asarray(q, dtype=np.float64)
    if arr.shape != (DEFAULT_NODES,):
        raise DomainError(f"toy model expects {DEFAULT_NODES} allocations")
    if (arr < 0).any():
        raise DomainError("allocations must be non-negative")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    lam = scale * (_toy_degrees().astype(np.float64) ** 2) * np.log1p(arr)
    return rng.poisson(lam)


def allocation_objective(q, problem: AllocationProblem, request_model) -> float:
    """Completed requests summed over nodes, minus the budget penalty."""
    arr = problem.check(q)
    completions = np.asarray(request_model(arr), dtype=np.float64)
    return float(completions.sum() - penalty(arr, problem.budget))


def external_objective(command, named_values, timeout: float = 30.0) -> np.ndarray:
    """One request/reply exchange with an external objective process.

    Writes a single JSON-object line mapping parameter names to values,
    reads a single JSON-array line of reals. Nonzero exit, malformed reply,
    or timeout raise ExternalObjectiveError with captured diagnostics.
    """
    request = json.dumps(dict(named_values), separators=(",", ":")) + "\n"
    try:
        proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )
    except OSError as exc:
        raise ExternalObjectiveError(f"could not spawn {command!r}: {exc}") from exc
    try:
        out, err = proc.communicate(request, timeout=timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        raise ExternalObjectiveError(
            f"external objective exceeded {timeout} s", diagnostics=f"command={command!r}"
        ) from None
    if proc.returncode != 0:
        raise ExternalObjectiveError(
            f"external objective exited with code {proc.returncode}",
            diagnostics=err.strip(),
        )
    reply = out.strip().splitlines()
    if not reply:
        raise ExternalObjectiveError("external objective sent no reply", diagnostics=err.strip())
    try:
        values = json.loads(reply[0])
    except json.JSONDecodeError as exc:
        raise ExternalObjectiveError(
            f"malformed reply line: {reply[0]!r}", diagnostics=str(exc)
        ) from exc
    if not isinstance(values, list) or not values:
        raise ExternalObjectiveError(f"reply must be a non-empty JSON array, got {reply[0]!r}")
    arr = np.asarray(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ExternalObjectiveError("reply contains non-finite values")
    return arr


def allocation_space(problem: AllocationProblem) -> SearchSpace:
    """Integer allocation parameters q_i with bounds [0, c_i]."""
    params = tuple(
        ParamSpec(name=f"q_{i}", kind="integer", bounds=(0, c))
        for i, c in enumerate(problem.capacities)
    )
    return SearchSpace(params=params)


class MemallocObjective(Objective):
    """Single-objective wrapper: request completions minus budget penalty.

    The request model is the built-in toy by default; passing ``command``
    delegates each run to an external process that replies with per-node
    completed-request counts (see docs/wire-protocol.md). The penalty is
    always applied locally.
    """

    m = 1

    def __init__(self, problem: AllocationProblem, scale: float = 8.0, command=None, timeout: float = 30.0):
        self.problem = problem
        self.scale = scale
        self.command = tuple(command) if command else None
        self.timeout = timeout

    def _request_model(self, rng):
        if self.command is None:
            return lambda q: toy_request_model(q, rng, self.scale)

        def external(q):
            named = {f"q_{i}": int(v) for i, v in enumerate(q)}
            named["seed"] = int(rng.integers(0, 2**31 - 1))
            counts = external_objective(self.command, named, self.timeout)
            if counts.shape[0] != self.problem.n_nodes:
                raise ExternalObjectiveError(
                    f"expected {self.problem.n_nodes} per-node counts, got {counts.shape[0]}"
                )
            return counts

        return external

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        value = allocation_objective(
            np.asarray(point.values, dtype=np.float64), self.problem, self._request_model(rng)
        )
        return np.array([value])


class ExternalObjective(Objective):
    """Generic optimizer objective backed by an external process."""

    def __init__(self, command, space: SearchSpace, m: int, timeout: float = 30.0):
        self.command = tuple(command)
        self.space = space
        self.m = int(m)
        self.timeout = timeout

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        named = point.as_dict(self.space)
        named.update(self.space.fixed)
        named["seed"] = int(rng.integers(0, 2**31 - 1))
        reply = external_objective(self.command, named, self.timeout)
        if reply.shape[0] != self.m:
            raise ExternalObjectiveError(
                f"expected {self.m} objective values, got {reply.shape[0]}"
            )
        return reply
