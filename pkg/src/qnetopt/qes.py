"""Event-driven quantum entanglement switch simulator.

Every node (users and one server) shares a fiber link with the switch and
generates link-level entanglement as a Poisson process whose rate follows
from the single-click scheme: success probability 2*eta*alpha per attempt,
attempt period 1 ms, transmissivity eta = 10^(-0.1*beta*L). Fresh links are
Werner states with w = 1 - 4*alpha/3 (fidelity 1 - alpha), stored in FIFO
buffers that evict their oldest entry when full. Whenever the server and at
least one user both hold a link, the switch swaps the server's oldest link
with the link of the user holding the oldest timestamp; the end-to-end
Werner parameter is the product of the two inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .errors import DomainError
from .optimizer import Objective
from .space import ConfigPoint, ParamSpec, SearchSpace

UTILITY_FLOOR = -20.0


@dataclass(frozen=True)
class QesTopology:
    """Per-node fiber lengths (km) to the switch; exactly one node is the server."""

    link_lengths: tuple
    server_index: int = 0
    buffer_size: int = 20
    attempt_period: float = 1e-3  # seconds
    attenuation: float = 0.2  # dB/km
    t_sim: float = 5.0  # seconds

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.link_lengths)
        if len(lengths) < 2:
            raise DomainError("need a server and at least one user")
        if any(x < 0 for x in lengths):
            raise DomainError("link lengths must be >= 0 km")
        if not (0 <= self.server_index < len(lengths)):
            raise DomainError(f"server index {self.server_index} out of range")
        if self.buffer_size < 1:
            raise DomainError("buffer size must be >= 1")
        if self.t_sim <= 0:
            raise DomainError("simulated duration must be positive")
        object.__setattr__(self, "link_lengths", lengths)

    @property
    def n_nodes(self) -> int:
        return len(self.link_lengths)

    @property
    def user_indices(self) -> tuple:
        return tuple(i for i in range(self.n_nodes) if i != self.server_index)


@dataclass(frozen=True)
class BrightStateConfig:
    """Per-link bright-state populations; 0 disables generation on that link."""

    alphas: tuple

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        for a in alphas:
            if not (0.0 <= a <= 0.5):
                raise DomainError(f"bright-state population {a} outside [0, 0.5]")
        object.__setattr__(self, "alphas", alphas)


@dataclass(frozen=True)
class StoredLink:
    werner_w: float
    timestamp: float
    owner: int

    def __post_init__(self):
        if not (0.0 <= self.werner_w <= 1.0):
            raise DomainError(f"Werner parameter {self.werner_w} outside [0, 1]")


@dataclass(frozen=True)
class UserStats:
    node: int
    rate: float  # end-to-end links per second
    mean_fidelity: float  # NaN when no swaps happened
    swap_count: int


def transmissivity(length_km: float, attenuation: float = 0.2) -> float:
    if length_km < 0:
        raise DomainError("length must be >= 0")
    return 10.0 ** (-0.1 * (attenuation * length_km))


def gen_success_prob(alpha: float, eta: float) -> float:
    if not (0.0 <= alpha <= 0.5):
        raise DomainError(f"bright-state population {alpha} outside [0, 0.5]")
    return 2.0 * eta * alpha


def link_werner(alpha: float) -> float:
    """Werner parameter of a fresh link: depolarizing probability 4*alpha/3."""
    if not (0.0 <= alpha <= 0.5):
        raise DomainError(f"bright-state population {alpha} outside [0, 0.5]")
    return 1.0 - (4.0 / 3.0) * alpha


def fidelity_from_werner(w: float) -> float:
    return (3.0 * w + 1.0) / 4.0


def swap(server_link: StoredLink, user_link: StoredLink) -> float:
    """End-to-end fidelity of a Bell-state measurement on two stored links."""
    return fidelity_from_werner(server_link.werner_w * user_link.werner_w)


def hashing_yield(fidelity: float) -> float:
    """Distillable-entanglement lower bound; zero-coefficient terms use x log x -> 0."""
    if not (0.0 <= fidelity <= 1.0):
        raise DomainError(f"fidelity {fidelity} outside [0, 1]")
    val = 1.0
    if fidelity > 0.0:
        val += fidelity * math.log2(fidelity)
    if fidelity < 1.0:
        val += (1.0 - fidelity) * math.log2((1.0 - fidelity) / 3.0)
    return max(val, 0.0)


def user_utility(stats: UserStats, floor: float = UTILITY_FLOOR) -> float:
    """log(rate * hashing yield); the floor substitutes for -inf on dead links."""
    if stats.swap_count == 0 or stats.rate <= 0.0:
        return floor
    product = stats.rate * hashing_yield(stats.mean_fidelity)
    if product <= 0.0:
        return floor
    return math.log(product)


@njit
def _qes_walk(ev_t, ev_node, n_nodes, server, buf_size):
    """Walk merged arrival events, maintaining per-node FIFO ring buffers.

    Returns (per-node swap counts, max buffer occupancy seen, 1 if buffer
    timestamps stayed strictly increasing).
    """
    ts = np.zeros((n_nodes, buf_size))
    head = np.zeros(n_nodes, dtype=np.int64)
    cnt = np.zeros(n_nodes, dtype=np.int64)
    swaps = np.zeros(n_nodes, dtype=np.int64)
    max_occ = 0
    ordered = 1
    for e in range(ev_t.shape[0]):
        t = ev_t[e]
        nd = ev_node[e]
        if cnt[nd] == buf_size:  # full: evict the oldest state
            head[nd] = (head[nd] + 1) % buf_size
            cnt[nd] -= 1
        if cnt[nd] > 0:
            newest = (head[nd] + cnt[nd] - 1) % buf_size
            if ts[nd, newest] >= t:
                ordered = 0
        ts[nd, (head[nd] + cnt[nd]) % buf_size] = t
        cnt[nd] += 1
        if cnt[nd] > max_occ:
            max_occ = cnt[nd]
        if cnt[server] > 0:
            oldest_user = -1
            oldest_t = np.inf
            for u in range(n_nodes):
                if u == server or cnt[u] == 0:
                    continue
                cand = ts[u, head[u]]
                if cand < oldest_t:
                    oldest_t = cand
                    oldest_user = u
            if oldest_user >= 0:
                head[server] = (head[server] + 1) % buf_size
                cnt[server] -= 1
                head[oldest_user] = (head[oldest_user] + 1) % buf_size
                cnt[oldest_user] -= 1
                swaps[oldest_user] += 1
    return swaps, max_occ, ordered


def _poisson_arrivals(rate: float, t_sim: float, rng: np.random.Generator) -> np.ndarray:
    if rate <= 0.0:
        return np.empty(0)
    expected = rate * t_sim
    chunk = max(16, int(expected + 6.0 * math.sqrt(expected) + 16))
    total = 0.0
    pieces = []
    while total < t_sim:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        cum = total + np.cumsum(gaps)
        pieces.append(cum)
        total = float(cum[-1])
    times = np.concatenate(pieces)
    return times[times < t_sim]


def _merged_events(topology: QesTopology, config: BrightStateConfig, rng):
    times = []
    nodes = []
    for i, (length, alpha) in enumerate(zip(topology.link_lengths, config.alphas)):
        eta = transmissivity(length, topology.attenuation)
        rate = gen_success_prob(alpha, eta) / topology.attempt_period
        t = _poisson_arrivals(rate, topology.t_sim, rng)
        times.append(t)
        nodes.append(np.full(t.shape[0], i, dtype=np.int64))
    all_t = np.concatenate(times) if times else np.empty(0)
    all_n = np.concatenate(nodes) if nodes else np.empty(0, dtype=np.int64)
    order = np.lexsort((all_n, all_t))  # time-ordered; ties break by link index
    return np.ascontiguousarray(all_t[order]), np.ascontiguousarray(all_n[order])


def simulate(topology: QesTopology, config: BrightStateConfig, rng) -> list:
    """One seeded run; per-user end-to-end rate, mean fidelity, swap count."""
    if len(config.alphas) != topology.n_nodes:
        raise DomainError(
            f"need {topology.n_nodes} bright-state values, got {len(config.alphas)}"
        )
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    ev_t, ev_node = _merged_events(topology, config, rng)
    swaps, max_occ, ordered = _qes_walk(
        ev_t, ev_node, topology.n_nodes, topology.server_index, topology.buffer_size
    )
    if max_occ > topology.buffer_size or not ordered:
        raise AssertionError("buffer invariant violated")  # pragma: no cover
    w_server = link_werner(config.alphas[topology.server_index])
    stats = []
    for u in topology.user_indices:
        count = int(swaps[u])
        fid = (
            fidelity_from_werner(w_server * link_werner(config.alphas[u]))
            if count > 0
            else float("nan")
        )
        stats.append(
            UserStats(node=u, rate=count / topology.t_sim, mean_fidelity=fid, swap_count=count)
        )
    return stats


def alpha_space(topology: QesTopology, low: float = 1e-3, high: float = 0.5) -> SearchSpace:
    """Continuous bright-state population per link (server link included)."""
    params = tuple(
        ParamSpec(name=f"alpha_{i}", kind="continuous", bounds=(low, high))
        for i in range(topology.n_nodes)
    )
    return SearchSpace(params=params)


class QesObjective(Objective):
    """Per-user distillable-entanglement utility of one switch simulation run."""

    def __init__(self, topology: QesTopology, utility_floor: float = UTILITY_FLOOR):
        self.topology = topology
        self.utility_floor = utility_floor
        self.m = topology.n_nodes - 1
        self.t_sim = topology.t_sim

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        config = BrightStateConfig(tuple(point.values))
        stats = simulate(self.topology, config, rng)
        return np.array([user_utility(s, self.utility_floor) for s in stats])
