import itertools
from fractions import Fraction

import pytest

from kroute.flow import edge_connectivity
from kroute.graph import INF, ParseError, parse_instance, write_instance
from kroute.oracle import brute_force_cut, brute_source_problems, check_feasible
from kroute.reductions import (MinRepInstance, ReductionContractError, SsveInstance, VcInstance,
                               map_minrep_solutions, map_ssve_solutions, map_vc_solutions,
                               minrep_pair_connectivity, minrep_to_edknmc, parse_source, reduce_source,
                               ssve_to_kmic, vc_to_allpairs, write_source)

# three U vertices, four V vertices, six edges, deg(u_0) = 2
EXAMPLE = SsveInstance(3, 4, ((0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3)), Fraction(2, 3))


# SSVE -> capacitated single-pair cut

def test_example_sizes_and_capacities():
    art = ssve_to_kmic(EXAMPLE)
    g, lay = art.instance.graph, art.layout
    N = art.params["N"]
    assert N == 25
    assert g.edges[lay["sa"]].capacity == g.edges[lay["bt"]].capacity == 150
    assert g.edges[lay["bu_edges"][0]].capacity == 50
    assert art.params["k"] == 1 + 25 * 6 + 1
    unit = [i for i, e in enumerate(g.edges) if e.cost != INF]
    assert sorted(unit) == sorted(e for grp in lay["xt_edges"] for e in grp)
    assert len(unit) == 4 * N


def test_ssve_needs_edges():
    with pytest.raises(ReductionContractError):
        ssve_to_kmic(SsveInstance(1, 1, (), 1))


def test_ssve_forward_whole_u():
    src = SsveInstance(2, 3, ((0, 0), (1, 1), (1, 2)), 1)
    art = ssve_to_kmic(src)
    removed = map_ssve_solutions(art, "forward", {0, 1})
    assert len(removed) == art.params["N"] * 3
    assert check_feasible(art.instance, removed, art.params["k"] - 1).feasible


def test_ssve_forward_rejects_small_sets():
    art = ssve_to_kmic(EXAMPLE)
    with pytest.raises(ReductionContractError):
        map_ssve_solutions(art, "forward", {0})


def test_ssve_backward_from_all_unit_edges():
    art = ssve_to_kmic(EXAMPLE)
    every = frozenset(e for grp in art.layout["xt_edges"] for e in grp)
    S = map_ssve_solutions(art, "backward", every)
    assert len(S) >= EXAMPLE.min_size
    assert len(EXAMPLE.neighbours(S)) <= EXAMPLE.n_v


def test_ssve_backward_rejects_infeasible_cut():
    art = ssve_to_kmic(EXAMPLE)
    with pytest.raises(ReductionContractError):
        map_ssve_solutions(art, "backward", frozenset())


def ssve_sources():
    for nu, nv in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        pairs = list(itertools.product(range(nu), range(nv)))
        for m in range(1, len(pairs) + 1):
            for E in itertools.combinations(pairs, m):
                for alpha in (Fraction(1, 2), Fraction(1)):
                    yield SsveInstance(nu, nv, E, alpha)


def test_ssve_cut_value_sits_in_the_top_band():
    # optimum lies in ((C-1)N, CN] for every tiny source
    for src in ssve_sources():
        art = ssve_to_kmic(src)
        C, S = brute_source_problems(src)
        N = art.params["N"]
        fw = map_ssve_solutions(art, "forward", S)
        opt = brute_force_cut(art.instance, art.params["k"] - 1, method="symmetry",
                              groups=art.layout["xt_edges"])
        assert (C - 1) * N < opt.cost <= C * N
        assert opt.cost <= len(fw)
        back = map_ssve_solutions(art, "backward", opt.removed)
        assert len(src.neighbours(back)) <= C


def test_ssve_slack_can_undercut_the_structured_value():
    # slack floor(|U|(1-alpha)) = 1 lets the cut keep one unit edge of a clique
    src = SsveInstance(2, 1, ((0, 0), (1, 0)), Fraction(1, 2))
    art = ssve_to_kmic(src)
    assert art.params["slack"] == 1
    C = brute_source_problems(src)[0]
    opt = brute_force_cut(art.instance, art.params["k"] - 1, method="symmetry", groups=art.layout["xt_edges"])
    assert opt.cost == C * art.params["N"] - 1


# MinRep -> edge-deletion node-connectivity cut

def minrep_sources():
    for nu, nw, l1, l2 in [(1, 1, 1, 1), (1, 1, 2, 2), (1, 2, 1, 2), (2, 1, 2, 1), (2, 2, 1, 1)]:
        pis = list(itertools.product(range(l2), repeat=l1))
        cells = list(itertools.product(range(nu), range(nw)))
        for m in (1, 2):
            for E in itertools.combinations(cells, m):
                for P in itertools.product(pis, repeat=m):
                    yield MinRepInstance(nu, nw, l1, l2, tuple((u, w, p) for (u, w), p in zip(E, P)))


def test_minrep_parameters():
    src = MinRepInstance(1, 1, 2, 2, ((0, 0, (1, 1)),))
    art = minrep_to_edknmc(src)
    assert art.params["r"] == 1
    assert art.params["k"] == max(art.layout["k_e"])
    # both labels map to label 1: one nonempty class
    assert len([c for c in art.layout["classes"][0] if c]) == 1


def test_minrep_full_and_empty_labelings():
    src = MinRepInstance(1, 2, 2, 2, ((0, 0, (0, 1)), (0, 1, (1, 1))))
    art = minrep_to_edknmc(src)
    k = art.params["k"]
    full = map_minrep_solutions(art, "forward", ([{0, 1}], [{0, 1}, {0, 1}]))
    assert all(c <= k - 1 for c in minrep_pair_connectivity(art, full))
    empty = map_minrep_solutions(art, "forward", ([set()], [set(), set()]))
    assert all(c >= k for c in minrep_pair_connectivity(art, empty))


def test_minrep_backward_reads_labels():
    src = MinRepInstance(1, 1, 2, 2, ((0, 0, (0, 1)),))
    art = minrep_to_edknmc(src)
    cut = map_minrep_solutions(art, "forward", ([{1}], [{1}]))
    lu, lw = map_minrep_solutions(art, "backward", cut)
    assert lu == [frozenset({1})] and lw == [frozenset({1})]
    infinite = next(i for i, e in enumerate(art.instance.graph.edges) if e.cost == INF)
    with pytest.raises(ReductionContractError):
        map_minrep_solutions(art, "backward", cut | {infinite})


def test_literal_gadget_breaks_on_a_shared_vertex():
    src = parse_source("minrep 1 2 1 1\ne 0 0 0\ne 0 1 0\n")
    C, W = brute_source_problems(src)
    literal = minrep_to_edknmc(src, closure=False)
    cut = map_minrep_solutions(literal, "forward", W)
    assert not check_feasible(literal.instance, cut, literal.params["k"] - 1).feasible
    closed = minrep_to_edknmc(src)
    cut = map_minrep_solutions(closed, "forward", W)
    assert check_feasible(closed.instance, cut, closed.params["k"] - 1).feasible


def test_minrep_values_match():
    checked = 0
    for src in minrep_sources():
        art = minrep_to_edknmc(src)
        C, W = brute_source_problems(src)
        inst = art.instance
        cut = map_minrep_solutions(art, "forward", W)
        assert len(cut) == C
        assert check_feasible(inst, cut, inst.k - 1).feasible
        opt = brute_force_cut(inst, inst.k - 1, method="branch", upper=cut)
        assert opt.cost == C
        lu, lw = map_minrep_solutions(art, "backward", opt.removed)
        assert not src.covers(lu, lw)
        checked += 1
    assert checked > 20


# vertex cover -> all-pairs cut

def test_vc_single_edge_gadget():
    art = vc_to_allpairs(VcInstance(2, ((0, 1),)), 3)
    lay = art.layout
    assert len(lay["path"]) == 2 and len(lay["sigma"]) == 1
    # two path links, one triangle, one sigma node
    assert art.instance.graph.node_count == 2 * 2 + 1 + 1
    opt = brute_force_cut(art.instance, 2, method="branch")
    assert opt.cost == 2 * 1 + 1


def test_vc_needs_k3():
    with pytest.raises(ReductionContractError):
        vc_to_allpairs(VcInstance(2, ((0, 1),)), 2)


def test_vc_forward_cost_and_backward_cover():
    src = VcInstance(4, ((0, 1), (1, 2), (2, 3)))
    art = vc_to_allpairs(src, 3)
    cut = map_vc_solutions(art, "forward", {1, 2})
    assert len(cut) == 2 * 3 + 2
    assert check_feasible(art.instance, cut, 2).feasible
    assert map_vc_solutions(art, "backward", cut) == frozenset({1, 2})
    with pytest.raises(ReductionContractError):
        map_vc_solutions(art, "forward", {0})


@pytest.mark.parametrize("k", [3, 4])
def test_vc_values_match_on_small_graphs(k):
    for edges in [((0, 1),), ((0, 1), (1, 2)), ((0, 1), (1, 2), (0, 2)), ((0, 1), (2, 3))]:
        src = VcInstance(1 + max(max(e) for e in edges), edges)
        p, cover = brute_source_problems(src)
        art = vc_to_allpairs(src, k)
        fw = map_vc_solutions(art, "forward", cover)
        opt = brute_force_cut(art.instance, k - 1, method="branch", upper=fw)
        assert opt.cost == 2 * len(edges) + p
        assert len(map_vc_solutions(art, "backward", opt.removed)) == p


def test_vc_edge_connectivity_of_parallel_links():
    art = vc_to_allpairs(VcInstance(2, ((0, 1),)), 4)
    a0, a1 = art.layout["path"][0][0], art.layout["path"][1][0]
    # k-2 direct links plus the triangle midpoint plus routes through the unit links
    assert edge_connectivity(art.instance.graph, a0, a1) >= 3


# formats

@pytest.mark.parametrize("src", [EXAMPLE, MinRepInstance(2, 1, 2, 3, ((0, 0, (2, 1)), (1, 0, (0, 0)))),
                                 VcInstance(3, ((0, 1), (1, 2)))])
def test_source_round_trip(src):
    assert parse_source(write_source(src)) == src
    inst = reduce_source(src).instance
    assert parse_instance(write_instance(inst)) == inst


@pytest.mark.parametrize("text", ["", "ssve 1 1\n", "vc 3 2\ne 0 1\n", "other 1\n", "minrep 1 1 2 2\ne 0 0 0\n"])
def test_bad_sources(text):
    with pytest.raises((ParseError, ReductionContractError)):
        parse_source(text)
