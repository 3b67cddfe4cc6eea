import itertools
import random
from fractions import Fraction

import networkx as nx
import pytest

from kroute.flow import (FlowContractError, InfeasibleError, Network, edge_connectivity, flow_tree,
                         isolating_cuts, max_cost_spanning_forest, max_flow_min_cut, node_connectivity)
from kroute.graph import INF, Edge, MultiGraph, generate_instance


def random_graph(seed, n=7, p=0.5, caps=False):
    rng = random.Random(seed)
    edges = [Edge(u, v, rng.randint(1, 5), rng.randint(1, 3) if caps else 1)
             for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return MultiGraph(n, tuple(edges))


def to_nx(g, removed=()):
    G = nx.Graph()
    G.add_nodes_from(range(g.node_count))
    for idx, e in enumerate(g.edges):
        if idx in removed or e.u == e.v:
            continue
        if G.has_edge(e.u, e.v):
            G[e.u][e.v]["capacity"] += e.capacity
        else:
            G.add_edge(e.u, e.v, capacity=e.capacity)
    return G


def test_parallel_edges_count_separately():
    g = MultiGraph(2, (Edge(0, 1, 1), Edge(0, 1, 1), Edge(0, 1, 1)))
    res = max_flow_min_cut(g, 0, 1)
    assert res.value == 3
    assert res.cut_edges == frozenset({0, 1, 2})
    assert edge_connectivity(g, 0, 1, removed_edges={1}) == 2


def test_source_minimal_cut():
    # a path 0-1-2 with a bottleneck on both edges: the cut closest to s wins
    g = MultiGraph(3, (Edge(0, 1, 1), Edge(1, 2, 1)))
    res = max_flow_min_cut(g, 0, 2, "unit")
    assert res.source_side == frozenset({0})
    assert res.cut_edges == frozenset({0})


def test_limit_stops_early():
    g = MultiGraph(2, tuple(Edge(0, 1, 1) for _ in range(10)))
    assert edge_connectivity(g, 0, 1, limit=3) == 3


def test_same_endpoints_rejected():
    g = MultiGraph(2, (Edge(0, 1, 1),))
    with pytest.raises(FlowContractError):
        max_flow_min_cut(g, 1, 1)


def test_node_connectivity_of_a_square():
    g = MultiGraph(4, (Edge(0, 1, 1), Edge(1, 3, 1), Edge(0, 2, 1), Edge(2, 3, 1)))
    assert node_connectivity(g, 0, 3) == 2
    assert node_connectivity(g, 0, 3, removed_nodes={1}) == 1
    assert node_connectivity(g, 0, 3, removed_edges={0, 2}) == 0


def test_direct_edges_count_once_each_for_node_paths():
    g = MultiGraph(3, (Edge(0, 2, 1), Edge(0, 2, 1), Edge(0, 1, 1), Edge(1, 2, 1)))
    assert node_connectivity(g, 0, 2) == 3


@pytest.mark.parametrize("seed", range(25))
def test_edge_connectivity_matches_networkx(seed):
    g = random_graph(seed, caps=True)
    G = to_nx(g)
    for s, t in [(0, 6), (1, 5), (2, 3)]:
        ours = max_flow_min_cut(g, s, t).value
        assert ours == nx.maximum_flow_value(G, s, t)


@pytest.mark.parametrize("seed", range(25))
def test_node_connectivity_matches_networkx(seed):
    g = random_graph(seed, p=0.45)
    G = to_nx(g)
    for s, t in [(0, 6), (1, 4)]:
        if G.has_edge(s, t):
            H = G.copy()
            H.remove_edge(s, t)
            want = nx.node_connectivity(H, s, t) + 1
        else:
            want = nx.node_connectivity(G, s, t)
        assert node_connectivity(g, s, t) == want


def test_exact_weights_with_fractions():
    g = MultiGraph(3, (Edge(0, 1, Fraction(1, 3)), Edge(1, 2, Fraction(1, 6)), Edge(0, 2, Fraction(1, 2))))
    res = max_flow_min_cut(g, 0, 2, "cost")
    assert res.value == Fraction(2, 3)


def test_infinite_cost_edges_are_never_cut():
    g = MultiGraph(3, (Edge(0, 1, INF), Edge(1, 2, 4), Edge(0, 2, 1)))
    res = max_flow_min_cut(g, 0, 2, "cost")
    assert res.value == 5
    assert 0 not in res.cut_edges


def test_network_residual_pairs():
    net = Network(3, True)
    a = net.add_edge(0, 1, 2)
    net.add_edge(1, 2, 1)
    assert net.max_flow(0, 2) == 1
    assert net.cap[a] == 1 and net.cap[a ^ 1] == 3
    assert net.reachable(0) == {0, 1}


def test_isolating_cuts_on_a_star():
    g = MultiGraph(4, (Edge(0, 3, 1), Edge(1, 3, 2), Edge(2, 3, 3)))
    cuts, total = isolating_cuts(g, [0, 1, 2], "cost")
    assert [c.cost for c in cuts] == [1, 2, 3]
    assert total == 6


def test_isolating_cut_of_unit_triangle_is_two_per_terminal():
    g = MultiGraph(3, (Edge(0, 1, 1), Edge(1, 2, 1), Edge(0, 2, 1)))
    cuts, total = isolating_cuts(g, [0, 1, 2], "cost")
    assert total == 6
    assert all(c.cost == 2 for c in cuts)


def test_spanning_forest_keeps_expensive_edges():
    g = MultiGraph(3, (Edge(0, 1, 1), Edge(1, 2, 2), Edge(0, 2, 3)))
    assert max_cost_spanning_forest(g) == frozenset({0})


def test_spanning_forest_infinite_cycle():
    g = MultiGraph(2, (Edge(0, 1, INF), Edge(0, 1, INF)))
    with pytest.raises(InfeasibleError):
        max_cost_spanning_forest(g)


@pytest.mark.parametrize("seed", range(10))
def test_flow_tree_reproduces_all_pair_connectivities(seed):
    g = random_graph(seed, n=6, p=0.6, caps=True)
    tree = flow_tree(g)
    T = nx.Graph()
    for v, p, w in tree:
        T.add_edge(v, p, w=w)
    for s, t in itertools.combinations(range(6), 2):
        path = nx.shortest_path(T, s, t)
        want = min(T[a][b]["w"] for a, b in zip(path, path[1:]))
        assert edge_connectivity(g, s, t) == want


def test_restriction_to_node_subset():
    inst = generate_instance("grid", {"width": 3, "height": 2, "r": 1, "k": 2}, 0)
    g = inst.graph
    # left column only: one edge between 0 and 3
    assert edge_connectivity(g, 0, 3, nodes={0, 3}) == 1
    assert edge_connectivity(g, 0, 3) == 2
