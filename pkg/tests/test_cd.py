import numpy as np
import pytest

from qnetopt.cd import (
    CdNetwork,
    CdObjective,
    EntLink,
    leaf_nodes,
    load_edge_list,
    new_state,
    q_swap_space,
    random_tree_edges,
    save_edge_list,
    simulate,
    step,
    three_node_path,
)
from qnetopt.errors import DomainError
from qnetopt.space import ConfigPoint


def two_node_net(**kw):
    kw.setdefault("p_gen", 1.0)
    kw.setdefault("p_cons", 0.0)
    return CdNetwork(edges=((0, 1),), n_nodes=2, users=(0, 1), r=5, **kw)


def run_steps(net, q_swap, n, seed=0):
    state = new_state(net)
    rng = np.random.default_rng(seed)
    for _ in range(n):
        state = step(state, net, q_swap, rng)
    return state


def test_network_validation():
    with pytest.raises(DomainError):
        CdNetwork(edges=((0, 0),), n_nodes=1, users=(0,))
    with pytest.raises(DomainError):
        CdNetwork(edges=((0, 1), (1, 0)), n_nodes=2, users=(0,))
    with pytest.raises(DomainError):
        CdNetwork(edges=((0, 1),), n_nodes=3, users=(0,))  # node 2 disconnected
    with pytest.raises(DomainError):
        CdNetwork(edges=((0, 1),), n_nodes=2, users=(0,), p_gen=1.5)
    with pytest.raises(DomainError):
        simulate(two_node_net(), [0.5], 0)  # wrong q_swap length


def test_single_edge_fills_to_capacity_then_saturates():
    net = two_node_net()
    state = run_steps(net, [0.0, 0.0], 5)
    assert len(state.links()) == 5
    assert state.free.tolist() == [0, 0]
    state6 = step(state, net, [0.0, 0.0], np.random.default_rng(9))
    assert len(state6.links()) == 5  # saturated until cutoff


def test_cutoff_zero_removes_everything_each_slot():
    net = two_node_net(t_cut=0)
    state = new_state(net)
    rng = np.random.default_rng(1)
    for s in range(10):
        state = step(state, net, [0.0, 0.0], rng)
        links = state.links()
        assert len(links) == 1
        assert all(l.birth_slot == state.slot - 1 for l in links)


def test_center_swap_creates_leaf_to_leaf_link():
    # node 0 is the middle node; with q_swap,0 = 1 and certain generation the
    # leaf-leaf link exists from slot 2 onward
    net = three_node_path(p_gen=1.0, p_cons=0.0)
    state = new_state(net)
    rng = np.random.default_rng(3)
    for s in range(1, 11):
        state = step(state, net, [1.0, 0.0, 0.0], rng)
        if s >= 2:
            assert 2 in state.virtual_neighbors(1)
            assert 1 in state.virtual_neighbors(2)


def test_swapped_link_spans_combined_hops():
    net = three_node_path(p_gen=1.0, p_cons=0.0)
    state = run_steps(net, [1.0, 0.0, 0.0], 3, seed=5)
    spans = {l.hops for l in state.links() if set(l.endpoints) == {1, 2}}
    assert spans == {2}


def test_hop_cap_blocks_swaps():
    net = three_node_path(p_gen=1.0, p_cons=0.0, max_hops=1)
    state = run_steps(net, [1.0, 1.0, 1.0], 10, seed=7)
    assert all(l.hops == 1 for l in state.links())
    assert all(set(l.endpoints) != {1, 2} for l in state.links())


def test_no_swaps_keeps_virtual_inside_physical():
    net = CdNetwork.from_edges(random_tree_edges(8, seed=3), users="all", p_gen=0.7, p_cons=0.1)
    adj = {i: set() for i in range(8)}
    for a, b in net.edges:
        adj[a].add(b)
        adj[b].add(a)
    state = new_state(net)
    rng = np.random.default_rng(11)
    for _ in range(60):
        state = step(state, net, np.zeros(8), rng)
        assert all(l.hops == 1 for l in state.links())
        for node in range(8):
            assert state.virtual_neighbors(node) <= adj[node]


def check_invariants(state, net):
    caps = net.capacities
    for node in range(net.n_nodes):
        used = state.used_qubits(node)
        assert used + state.free[node] == caps[node]
        assert used <= caps[node]
        vn = state.virtual_neighbors(node)
        assert len(vn) <= min(net.n_nodes - 1, caps[node])
        assert node not in vn
    for link in state.links():
        a, b = link.endpoints
        assert a != b
        assert 1 <= link.hops <= net.max_hops
        assert state.slot - 1 - link.birth_slot <= net.t_cut


def test_invariant_fuzz_randomized_slots():
    # module-scale fuzz; the acceptance suite runs the full 1e5 slots
    rng = np.random.default_rng(99)
    total = 0
    for trial in range(20):
        n = int(rng.integers(3, 8))
        net = CdNetwork.from_edges(
            random_tree_edges(n, seed=int(rng.integers(1000))),
            users="all",
            r=int(rng.integers(1, 4)),
            max_hops=int(rng.integers(1, 5)),
            t_cut=int(rng.integers(0, 6)),
            p_gen=float(rng.uniform(0.2, 1.0)),
            p_cons=float(rng.uniform(0.0, 0.5)),
        )
        q = rng.uniform(0.0, 1.0, n)
        state = new_state(net)
        for _ in range(500):
            state = step(state, net, q, rng)
            total += 1
            check_invariants(state, net)
    assert total == 10_000


def test_step_leaves_input_state_untouched():
    net = two_node_net()
    state = run_steps(net, [0.0, 0.0], 2)
    snapshot = (state.alive.copy(), state.free.copy(), state.slot)
    step(state, net, [0.0, 0.0], np.random.default_rng(0))
    assert np.array_equal(state.alive, snapshot[0])
    assert np.array_equal(state.free, snapshot[1])
    assert state.slot == snapshot[2]


def test_simulate_no_generation_gives_zero():
    net = three_node_path(p_gen=0.0, p_cons=0.0)
    assert simulate(net, [0.5, 0.5, 0.5], 0).tolist() == [0.0, 0.0, 0.0]


def test_simulate_three_node_counting_bound():
    net = three_node_path()
    for seed in range(50):
        means = simulate(net, [0.2, 0.5, 0.5], np.random.default_rng((4, seed)))
        assert means.shape == (3,)
        assert means.sum() <= 6.0


def test_simulate_low_center_swap_beats_high():
    net = three_node_path()
    low = np.mean(
        [simulate(net, [0.2, 0.5, 0.5], np.random.default_rng((5, s))).sum() for s in range(200)]
    )
    high = np.mean(
        [simulate(net, [0.9, 0.5, 0.5], np.random.default_rng((6, s))).sum() for s in range(200)]
    )
    assert low > high


def test_simulate_needs_room_after_warmup():
    net = three_node_path(t_sim=20, t_cut=28)
    with pytest.raises(DomainError):
        simulate(net, [0.2, 0.2, 0.2], 0)


def test_random_tree_and_leaves():
    edges = random_tree_edges(20, seed=7)
    assert len(edges) == 19
    net = CdNetwork.from_edges(edges, users="leaves")
    assert net.n_nodes == 20
    assert set(net.users) == set(leaf_nodes(edges, 20))
    assert all(net.degrees[u] == 1 for u in net.users)
    assert random_tree_edges(20, seed=7) == edges  # stated seed, stable topology


def test_edge_list_round_trip(tmp_path):
    edges = random_tree_edges(9, seed=1)
    path = tmp_path / "net.edges"
    save_edge_list(path, edges)
    assert load_edge_list(path) == edges
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n2\n")
    with pytest.raises(DomainError):
        load_edge_list(bad)


def test_objective_groups_map_to_nodes():
    net = three_node_path()
    obj = CdObjective(net, param_nodes=((0,), (1, 2)))
    assert obj.m == 3
    q = obj.q_vector(ConfigPoint((0.2, 0.7)))
    assert q.tolist() == [0.2, 0.7, 0.7]
    space = q_swap_space(net, ((0,), (1, 2)))
    assert space.names == ("q_swap_0", "q_swap_1-2")
    with pytest.raises(DomainError):
        CdObjective(net, param_nodes=((0,), (1,)))
    out = obj.run(ConfigPoint((0.2, 0.5)), np.random.default_rng(0))
    assert out.shape == (3,)
