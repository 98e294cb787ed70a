"""Slotted simulator of continuous entanglement distribution.

Each slot applies, in order: (1) cutoff — links older than t_cut slots are
removed; (2) generation — every physical edge succeeds with p_gen when both
endpoints have a free qubit; (3) swaps — nodes, visited in a fresh random
order, each pick two random incident links and with probability q_swap fuse
them into one link spanning the combined hops (aborted when the endpoints
coincide or the hop cap M would be exceeded); (4) consumption — every node
pair sharing a link loses its oldest one with probability p_cons. Node i
holds r * degree(i) qubits; a link occupies one qubit at each endpoint.

The per-run kernel consumes only pre-drawn uniforms, so the numba and
pure-numpy paths are bit-identical.
"""

import heapq
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._accel import njit
from .errors import DomainError
from .optimizer import Objective
from .space import ConfigPoint, ParamSpec, SearchSpace


@dataclass(frozen=True)
class CdNetwork:
    edges: tuple
    n_nodes: int
    users: tuple
    r: int = 5  # qubits per unit of node degree
    max_hops: int = 10  # M: physical links an entangled link may span
    t_cut: int = 28  # slots a link may age before removal
    p_gen: float = 0.9
    p_cons: float = 0.225  # default: p_gen / 4
    t_sim: int = 1000  # slots per simulation run

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        seen = set()
        for a, b in edges:
            if a == b:
                raise DomainError(f"self-edge {a}-{b}")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise DomainError(f"edge {a}-{b} out of node range")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DomainError(f"duplicate edge {a}-{b}")
            seen.add(key)
        users = tuple(int(u) for u in self.users)
        if not users or any(not 0 <= u < self.n_nodes for u in users):
            raise DomainError("users must be a non-empty subset of nodes")
        if self.r < 1 or self.max_hops < 1 or self.t_cut < 0:
            raise DomainError("need r >= 1, M >= 1, t_cut >= 0")
        for p in (self.p_gen, self.p_cons):
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"probability {p} outside [0, 1]")
        if self.t_sim < 1:
            raise DomainError("t_sim must be >= 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "users", users)
        if not self._connected():
            raise DomainError("graph must be connected")

    def _connected(self) -> bool:
        adj = [[] for _ in range(self.n_nodes)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.n_nodes

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @property
    def capacities(self) -> np.ndarray:
        return self.r * self.degrees

    @property
    def max_links(self) -> int:
        return int(self.capacities.sum()) // 2

    @classmethod
    def from_edges(cls, edges, users="leaves", **kwargs) -> "CdNetwork":
        edges = tuple(edges)
        n = max(max(a, b) for a, b in edges) + 1
        if users == "leaves":
            users = leaf_nodes(edges, n)
        elif users == "all":
            users = tuple(range(n))
        return cls(edges=edges, n_nodes=n, users=tuple(users), **kwargs)


@dataclass(frozen=True)
class EntLink:
    """Read-only view of one entangled link."""

    endpoints: tuple
    birth_slot: int
    hops: int


@dataclass
class CdState:
    link_a: np.ndarray
    link_b: np.ndarray
    birth: np.ndarray
    hops: np.ndarray
    alive: np.ndarray
    free: np.ndarray
    slot: int

    def links(self) -> list:
        out = []
        for i in np.flatnonzero(self.alive):
            out.append(
                EntLink(
                    endpoints=(int(self.link_a[i]), int(self.link_b[i])),
                    birth_slot=int(self.birth[i]),
                    hops=int(self.hops[i]),
                )
            )
        return out

    def used_qubits(self, node: int) -> int:
        mask = self.alive.astype(bool)
        return int((self.link_a[mask] == node).sum() + (self.link_b[mask] == node).sum())

    def virtual_neighbors(self, node: int) -> set:
        out = set()
        for i in np.flatnonzero(self.alive):
            if self.link_a[i] == node:
                out.add(int(self.link_b[i]))
            elif self.link_b[i] == node:
                out.add(int(self.link_a[i]))
        return out


def new_state(network: CdNetwork) -> CdState:
    m = network.max_links
    return CdState(
        link_a=np.zeros(m, dtype=np.int64),
        link_b=np.zeros(m, dtype=np.int64),
        birth=np.zeros(m, dtype=np.int64),
        hops=np.zeros(m, dtype=np.int64),
        alive=np.zeros(m, dtype=np.uint8),
        free=network.capacities.astype(np.int64),
        slot=0,
    )


@njit
def _cd_run(
    la,
    lb,
    birth,
    hops,
    alive,
    free,
    start_slot,
    n_slots,
    ea,
    eb,
    q_swap,
    p_gen,
    p_cons,
    t_cut,
    max_hops,
    gen_u,
    orders,
    swap_u,
    choice_u,
    cons_u,
    users,
    record_from,
):
    n_nodes = free.shape[0]
    max_links = la.shape[0]
    n_users = users.shape[0]
    vn_sums = np.zeros(n_users)
    seen = np.zeros(n_nodes, dtype=np.int64)
    incid = np.zeros(max_links, dtype=np.int64)
    pair_a = np.zeros(max_links, dtype=np.int64)
    pair_b = np.zeros(max_links, dtype=np.int64)
    stamp = 0
    for srel in range(n_slots):
        s = start_slot + srel

        # (1) cutoff: age counts completed slots since birth, removal is strict
        for li in range(max_links):
            if alive[li] == 1 and s - birth[li] > t_cut:
                alive[li] = 0
                free[la[li]] += 1
                free[lb[li]] += 1

        # (2) generation on every physical edge with a free qubit at both ends
        for e in range(ea.shape[0]):
            if gen_u[srel, e] < p_gen:
                a = ea[e]
                b = eb[e]
                if free[a] > 0 and free[b] > 0:
                    for li in range(max_links):
                        if alive[li] == 0:
                            la[li] = a
                            lb[li] = b
                            birth[li] = s
                            hops[li] = 1
                            alive[li] = 1
                            break
                    free[a] -= 1
                    free[b] -= 1

        # (3) one swap attempt per node, in this slot's random order
        for pos in range(n_nodes):
            i = orders[srel, pos]
            if swap_u[srel, i] >= q_swap[i]:
                continue
            k = 0
            for li in range(max_links):
                if alive[li] == 1 and (la[li] == i or lb[li] == i):
                    incid[k] = li
                    k += 1
            if k < 2:
                continue
            c1 = int(choice_u[srel, i, 0] * k)
            c2 = int(choice_u[srel, i, 1] * (k - 1))
            if c2 >= c1:
                c2 += 1
            l1 = incid[c1]
            l2 = incid[c2]
            j = lb[l1] if la[l1] == i else la[l1]
            k2 = lb[l2] if la[l2] == i else la[l2]
            if j == k2:
                continue
            h = hops[l1] + hops[l2]
            if h > max_hops:
                continue
            # releasing both links frees one qubit at j and at k2, which the
            # new link re-occupies; the guard can only bind if accounting broke
            if free[j] + 1 < 1 or free[k2] + 1 < 1:
                continue
            new_birth = birth[l1] if birth[l1] < birth[l2] else birth[l2]
            alive[l1] = 0
            alive[l2] = 0
            free[i] += 2
            free[j] += 1
            free[k2] += 1
            for li in range(max_links):
                if alive[li] == 0:
                    la[li] = j
                    lb[li] = k2
                    birth[li] = new_birth
                    hops[li] = h
                    alive[li] = 1
                    break
            free[j] -= 1
            free[k2] -= 1

        # (4) each pair sharing a link consumes its oldest one with p_cons
        n_pairs = 0
        for li in range(max_links):
            if alive[li] == 0:
                continue
            a = la[li]
            b = lb[li]
            if a > b:
                a, b = b, a
            duplicate = False
            for q in range(n_pairs):
                if pair_a[q] == a and pair_b[q] == b:
                    duplicate = True
                    break
            if duplicate:
                continue
            pair_a[n_pairs] = a
            pair_b[n_pairs] = b
            u = cons_u[srel, n_pairs]
            n_pairs += 1
            if u < p_cons:
                oldest = -1
                oldest_birth = np.int64(2**62)
                for lj in range(max_links):
                    if alive[lj] == 1:
                        x = la[lj]
                        y = lb[lj]
                        if x > y:
                            x, y = y, x
                        if x == a and y == b and birth[lj] < oldest_birth:
                            oldest_birth = birth[lj]
                            oldest = lj
                alive[oldest] = 0
                free[la[oldest]] += 1
                free[lb[oldest]] += 1

        if s >= record_from:
            for ui in range(n_users):
                un = users[ui]
                stamp += 1
                c = 0
                for li in range(max_links):
                    if alive[li] == 1:
                        partner = -1
                        if la[li] == un:
                            partner = lb[li]
                        elif lb[li] == un:
                            partner = la[li]
                        if partner >= 0 and seen[partner] != stamp:
                            seen[partner] = stamp
                            c += 1
                vn_sums[ui] += c
    return vn_sums


def _draw_slot_randomness(network: CdNetwork, n_slots: int, rng: np.random.Generator):
    n, e, m = network.n_nodes, len(network.edges), network.max_links
    gen_u = rng.random((n_slots, e))
    orders = np.argsort(rng.random((n_slots, n)), axis=1, kind="stable").astype(np.int64)
    swap_u = rng.random((n_slots, n))
    choice_u = rng.random((n_slots, n, 2))
    cons_u = rng.random((n_slots, m))
    return gen_u, orders, swap_u, choice_u, cons_u


def _check_q_swap(network: CdNetwork, q_swap) -> np.ndarray:
    q = np.asarray(q_swap, dtype=np.float64)
    if q.shape != (network.n_nodes,):
        raise DomainError(f"q_swap must have length {network.n_nodes}")
    if ((q < 0.0) | (q > 1.0)).any():
        raise DomainError("swap probabilities must lie in [0, 1]")
    return q


def step(state: CdState, network: CdNetwork, q_swap, rng) -> CdState:
    """Advance one slot; returns a new state, leaving the input untouched."""
    q = _check_q_swap(network, q_swap)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    ea = np.array([a for a, _ in network.edges], dtype=np.int64)
    eb = np.array([b for _, b in network.edges], dtype=np.int64)
    gen_u, orders, swap_u, choice_u, cons_u = _draw_slot_randomness(network, 1, rng)
    out = replace(
        state,
        link_a=state.link_a.copy(),
        link_b=state.link_b.copy(),
        birth=state.birth.copy(),
        hops=state.hops.copy(),
        alive=state.alive.copy(),
        free=state.free.copy(),
        slot=state.slot + 1,
    )
    _cd_run(
        out.link_a,
        out.link_b,
        out.birth,
        out.hops,
        out.alive,
        out.free,
        state.slot,
        1,
        ea,
        eb,
        q,
        network.p_gen,
        network.p_cons,
        network.t_cut,
        network.max_hops,
        gen_u,
        orders,
        swap_u,
        choice_u,
        cons_u,
        np.array(network.users, dtype=np.int64),
        np.int64(2**62),
    )
    return out


def simulate(network: CdNetwork, q_swap, rng) -> np.ndarray:
    """One seeded run of t_sim slots; per-user mean virtual-neighbor counts,
    averaged over the slots after a warm-up of t_cut slots."""
    q = _check_q_swap(network, q_swap)
    if network.t_sim <= network.t_cut:
        raise DomainError("t_sim must exceed the warm-up of t_cut slots")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    state = new_state(network)
    ea = np.array([a for a, _ in network.edges], dtype=np.int64)
    eb = np.array([b for _, b in network.edges], dtype=np.int64)
    gen_u, orders, swap_u, choice_u, cons_u = _draw_slot_randomness(network, network.t_sim, rng)
    vn_sums = _cd_run(
        state.link_a,
        state.link_b,
        state.birth,
        state.hops,
        state.alive,
        state.free,
        0,
        network.t_sim,
        ea,
        eb,
        q,
        network.p_gen,
        network.p_cons,
        network.t_cut,
        network.max_hops,
        gen_u,
        orders,
        swap_u,
        choice_u,
        cons_u,
        np.array(network.users, dtype=np.int64),
        np.int64(network.t_cut),
    )
    return vn_sums / (network.t_sim - network.t_cut)


def leaf_nodes(edges, n_nodes: int) -> tuple:
    deg = [0] * n_nodes
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return tuple(i for i, d in enumerate(deg) if d == 1)


def three_node_path(**kwargs) -> CdNetwork:
    """Two leaves attached to a middle node; node 0 is the middle node."""
    return CdNetwork(edges=((0, 1), (0, 2)), n_nodes=3, users=(0, 1, 2), **kwargs)


def random_tree_edges(n_nodes: int, seed: int) -> tuple:
    """Uniform random labeled tree (Pruefer decode) with a stated seed."""
    if n_nodes < 2:
        raise DomainError("a tree needs at least 2 nodes")
    if n_nodes == 2:
        return ((0, 1),)
    rng = np.random.default_rng(seed)
    prufer = rng.integers(0, n_nodes, size=n_nodes - 2)
    degree = np.ones(n_nodes, dtype=np.int64)
    for p in prufer:
        degree[p] += 1
    leaves = [i for i in range(n_nodes) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for p in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(p)))
        degree[p] -= 1
        if degree[p] == 1:
            heapq.heappush(leaves, int(p))
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return tuple(edges)


def load_edge_list(path) -> tuple:
    """Edge-list text file: one 'a b' pair per line, '#' comments allowed."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DomainError(f"{path}:{lineno}: expected 'a b', got {raw.strip()!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: non-integer node id") from exc
    if not edges:
        raise DomainError(f"{path}: no edges found")
    return tuple(edges)


def save_edge_list(path, edges) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in edges:
            fh.write(f"{a} {b}\n")


def q_swap_space(network: CdNetwork, param_nodes: Optional[tuple] = None) -> SearchSpace:
    """One swap-probability parameter per node group (default: per node)."""
    groups = _node_groups(network, param_nodes)
    params = tuple(
        ParamSpec(
            name="q_swap_" + "-".join(str(n) for n in group),
            kind="continuous",
            bounds=(0.0, 1.0),
        )
        for group in groups
    )
    return SearchSpace(params=params)


def _node_groups(network: CdNetwork, param_nodes: Optional[tuple]) -> tuple:
    if param_nodes is None:
        return tuple((i,) for i in range(network.n_nodes))
    groups = tuple(tuple(int(n) for n in g) for g in param_nodes)
    flat = [n for g in groups for n in g]
    if sorted(flat) != list(range(network.n_nodes)):
        raise DomainError("param_nodes must partition the node set")
    return groups


class CdObjective(Objective):
    """Per-user mean virtual neighbors of one protocol run."""

    def __init__(self, network: CdNetwork, param_nodes: Optional[tuple] = None):
        self.network = network
        self.groups = _node_groups(network, param_nodes)
        self.m = len(network.users)
        self.t_sim = float(network.t_sim)

    def q_vector(self, point: ConfigPoint) -> np.ndarray:
        q = np.empty(self.network.n_nodes)
        for group, value in zip(self.groups, point.values):
            for node in group:
                q[node] = float(value)
        return q

    def run(self, point: ConfigPoint, rng: np.random.Generator) -> np.ndarray:
        return simulate(self.network, self.q_vector(point), rng)
