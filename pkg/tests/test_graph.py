from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kroute.graph import (INF, CutInstance, Edge, MultiGraph, ParseError, ValidationError, format_cost,
                          generate_instance, induced_edges, parse_cost, parse_instance,
                          planted_crossing_edges, write_instance)


def test_parse_basic_edge_instance():
    inst = parse_instance("kroute edge 3 2 1 2\ne 0 1 1\ne 1 2 2.5 3\nc 0 2\n")
    assert inst.variant == "edge" and inst.k == 2 and inst.r == 1
    assert inst.graph.edges[1] == Edge(1, 2, Fraction(5, 2), 3)
    assert inst.pairs() == [(0, 2)]


def test_comments_and_blank_lines_are_ignored():
    text = "# leading\n\nkroute single 2 1 1 1  # header\ne 0 1 inf\n\nc 0 1\n"
    inst = parse_instance(text)
    assert inst.graph.edges[0].cost == INF


def test_allpairs_without_terminal_line_means_all_nodes():
    inst = parse_instance("kroute allpairs 3 1 3 2\ne 0 1 1\n")
    assert inst.terminals == (0, 1, 2)
    assert len(inst.pairs()) == 3


def test_multiway_needs_terminals():
    with pytest.raises(ValidationError):
        parse_instance("kroute multiway 3 1 2 2\ne 0 1 1\n")


def test_ndnode_needs_every_node_cost():
    with pytest.raises(ValidationError):
        parse_instance("kroute ndnode 3 1 1 2\ne 0 1 1\nc 0 2\nw 0 1\nw 1 1\n")


@pytest.mark.parametrize("text,exc", [
    ("", ParseError),
    ("kroute edge 2 1 1\ne 0 1 1\nc 0 1\n", ParseError),
    ("kroute weird 2 1 1 2\n", ParseError),
    ("kroute edge 2 2 1 2\ne 0 1 1\nc 0 1\n", ValidationError),
    ("kroute edge 2 1 1 2\ne 0 5 1\nc 0 1\n", ValidationError),
    ("kroute edge 2 1 1 2\ne 0 1 -1\nc 0 1\n", ValidationError),
    ("kroute edge 2 1 1 2\ne 0 1 1\nc 0 0\n", ValidationError),
    ("kroute edge 2 1 1 2\ne 0 1 1\nx 0 1\n", ParseError),
    ("kroute edge 2 1 1 2\ne 0 1 1 0\nc 0 1\n", ValidationError),
    ("kroute edge 2 1 1 0\ne 0 1 1\nc 0 1\n", ValidationError),
])
def test_malformed_documents(text, exc):
    with pytest.raises(exc):
        parse_instance(text)


def test_parse_error_carries_line_number():
    with pytest.raises(ParseError) as info:
        parse_instance("kroute edge 2 1 1 2\n\ne 0 1 1\nq\n")
    assert info.value.line == 4


def test_cost_literals_are_exact():
    assert parse_cost("0.1") == Fraction(1, 10)
    assert format_cost(Fraction(1, 10)) == "0.1"
    assert format_cost(Fraction(25, 4)) == "6.25"
    assert format_cost(INF) == "inf"
    with pytest.raises(ValueError):
        format_cost(Fraction(1, 3))


def test_write_then_parse_is_identity_on_fixed_example():
    g = MultiGraph(4, (Edge(0, 1, Fraction(3, 2), 2), Edge(1, 2, INF), Edge(2, 3, 7)),
                   (Fraction(1), INF, Fraction(1, 4), Fraction(2)))
    inst = CutInstance(g, ((0, 3), (1, 3)), 3, "ndnode")
    assert parse_instance(write_instance(inst)) == inst


decimal_costs = st.one_of(st.just(INF), st.integers(0, 50).map(Fraction),
                          st.integers(0, 999).map(lambda v: Fraction(v, 8)))


@st.composite
def instances(draw):
    n = draw(st.integers(2, 6))
    m = draw(st.integers(0, 8))
    edges = tuple(Edge(draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1)), draw(decimal_costs),
                       draw(st.integers(1, 3))) for _ in range(m))
    variant = draw(st.sampled_from(["edge", "ednode", "ndnode", "multiway", "allpairs", "single"]))
    node_costs = tuple(draw(decimal_costs) for _ in range(n)) if variant == "ndnode" else None
    k = draw(st.integers(1, 4))
    g = MultiGraph(n, edges, node_costs)
    if variant in ("multiway", "allpairs"):
        terms = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
        return CutInstance(g, (), k, variant, tuple(terms))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]),
                          min_size=1, max_size=1 if variant == "single" else 3))
    return CutInstance(g, tuple(pairs), k, variant)


@settings(max_examples=150, deadline=None)
@given(instances())
def test_round_trip_property(inst):
    text = write_instance(inst)
    assert parse_instance(text) == inst
    assert write_instance(parse_instance(text)) == text


@pytest.mark.parametrize("model,params", [
    ("gnp", {"n": 7, "p": 0.5, "r": 2, "k": 2, "variant": "edge", "cost_range": (1, 4)}),
    ("grid", {"width": 3, "height": 3, "r": 2, "k": 3, "variant": "multiway"}),
    ("planted", {"cluster_sizes": (3, 3, 2), "crossing": 2, "r": 2, "k": 2, "variant": "edge"}),
    ("gnp", {"n": 6, "p": 0.4, "r": 2, "k": 2, "variant": "ndnode", "node_cost_range": (1, 3)}),
])
def test_generator_is_pure_and_round_trips(model, params):
    a = generate_instance(model, params, 11)
    b = generate_instance(model, params, 11)
    assert a == b
    assert parse_instance(write_instance(a)) == a


def test_generator_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        generate_instance("gnp", {"n": 1, "p": 0.5}, 0)
    with pytest.raises(ValidationError):
        generate_instance("gnp", {"n": 4, "p": 1.5}, 0)
    with pytest.raises(ValidationError):
        generate_instance("gnp", {"n": 3, "p": 0.5, "r": 9}, 0)


def test_ndnode_generator_avoids_adjacent_pairs():
    for seed in range(20):
        inst = generate_instance("gnp", {"n": 7, "p": 0.4, "r": 2, "k": 2, "variant": "ndnode"}, seed)
        adjacent = {frozenset((e.u, e.v)) for e in inst.graph.edges}
        assert all(frozenset(p) not in adjacent for p in inst.commodities)


def test_planted_crossing_edges_separate_clusters():
    inst = generate_instance("planted", {"cluster_sizes": (3, 3), "crossing": 2, "r": 1, "k": 2}, 4)
    crossing = planted_crossing_edges(inst, (3, 3))
    for idx in crossing:
        e = inst.graph.edges[idx]
        assert (e.u < 3) != (e.v < 3)
    inside = induced_edges(inst.graph, range(3))
    assert not set(inside) & set(crossing)
