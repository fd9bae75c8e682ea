import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_instance
from dreps.relstruct import (
    Graph, PartitionedGraph, RelStructure, Signature, StructureError, complete_graph,
    connected_components, cycle_graph, format_structure, gaifman_graph, graph_structure,
    grid_graph, individualise, parse_structure, path_graph, structure_graph,
)

E2 = Signature((("E", 2),))


def c4_structure():
    return RelStructure.from_named(E2, ["1", "2", "3", "4"],
                                   {"E": [("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")]})


def test_signature_rejects_duplicates_and_bad_arity():
    with pytest.raises(StructureError):
        Signature((("R", 2), ("R", 1)))
    with pytest.raises(StructureError):
        Signature((("R", 0),))


def test_structure_rejects_wrong_arity_and_foreign_elements():
    with pytest.raises(StructureError):
        RelStructure(E2, ("a", "b"), {"E": frozenset({(0, 1, 1)})})
    with pytest.raises(StructureError):
        RelStructure(E2, ("a", "b"), {"E": frozenset({(0, 5)})})


def test_gaifman_of_ternary_tuple_is_triangle():
    A = RelStructure.from_named(Signature((("R", 3),)), ["1", "2", "3"], {"R": [("1", "2", "3")]})
    G = gaifman_graph(A)
    assert G.named_edges() == {frozenset(p) for p in [("1", "2"), ("1", "3"), ("2", "3")]}


def test_gaifman_of_unary_only_is_edgeless():
    A = RelStructure.from_named(Signature((("U", 1),)), ["a", "b"], {"U": [("a",), ("b",)]})
    assert gaifman_graph(A).m == 0
    assert len(gaifman_graph(A)) == 2


def test_gaifman_of_c4():
    G = gaifman_graph(c4_structure())
    assert G.m == 4
    assert all(len(G.adj[v]) == 2 for v in range(4))


def test_individualise_k2():
    A = graph_structure(complete_graph(2))
    A_id = individualise(A)
    assert A_id.named("P_x1") == {("x1",)}
    assert A_id.named("P_x2") == {("x2",)}
    assert A_id.norm == A.norm + 2


def test_individualise_empty_relations():
    A = RelStructure(Signature((("R", 2),)), ("a",), {})
    A_id = individualise(A)
    assert A_id.named("P_a") == {("a",)}
    assert A_id.norm == 1


def test_individualise_twice_collides():
    with pytest.raises(StructureError):
        individualise(individualise(c4_structure()))


def test_connected_components():
    assert connected_components(c4_structure()) == [{"1", "2", "3", "4"}]
    two = RelStructure.from_named(E2, ["a", "b", "c", "d"], {"E": [("a", "b"), ("c", "d")]})
    assert sorted(map(sorted, connected_components(two))) == [["a", "b"], ["c", "d"]]
    single = RelStructure(E2, ("z",), {})
    assert connected_components(single) == [{"z"}]


def test_isolated_elements_are_flagged():
    A = RelStructure.from_named(E2, ["a", "b", "c"], {"E": [("a", "b")]})
    assert A.isolated() == ["c"]


def test_parse_accumulates_rel_lines_and_ignores_comments():
    text = """# comment
sig E/2 P_a/1
universe a b c
rel E (a,b)
rel E (b,c)  # trailing
rel P_a (a)
"""
    A = parse_structure(text)
    assert A.named("E") == {("a", "b"), ("b", "c")}
    assert format_structure(parse_structure(format_structure(A))) == format_structure(A)


def test_parse_errors():
    with pytest.raises(StructureError):
        parse_structure("universe a\n")
    with pytest.raises(StructureError):
        parse_structure("sig E/2\nuniverse a\nrel E (a,z)\n")
    with pytest.raises(StructureError):
        parse_structure("sig E/2\nuniverse a\nrel F (a,a)\n")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_is_byte_identical(seed):
    A, B = random_instance(seed)
    for S in (A, B):
        text = format_structure(S)
        assert format_structure(parse_structure(text)) == text
        assert parse_structure(text) == S


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_individualise_keeps_gaifman_graph_and_adds_one_tuple_per_element(seed):
    A, _ = random_instance(seed)
    A_id = individualise(A)
    assert gaifman_graph(A_id) == gaifman_graph(A)
    assert A_id.norm == A.norm + len(A)


def test_graph_from_named_rejects_unknown_vertex():
    with pytest.raises(StructureError):
        Graph.from_named(["a"], [("a", "b")])


def test_graph_generators():
    assert path_graph(5).m == 4
    assert cycle_graph(5).m == 5
    assert complete_graph(4).m == 6
    g = grid_graph(3)
    assert len(g) == 9 and g.m == 12
    assert "v2_3" in g.index


def test_graph_rejects_loops_and_bad_edges():
    with pytest.raises(StructureError):
        Graph(("a",), frozenset({(0, 0)}))
    with pytest.raises(StructureError):
        Graph(("a", "b"), frozenset({(0, 2)}))


def test_graph_structure_round_trip():
    g = cycle_graph(6)
    assert structure_graph(graph_structure(g)) == g


def test_partitioned_graph_checks_partition():
    ok = PartitionedGraph.build(["a", "b"], [("a", "b")], {"x": ["a"], "y": ["b"], "z": []})
    assert ok.cls("z") == []
    assert ok.colour_of == {0: "x", 1: "y"}
    with pytest.raises(StructureError):
        PartitionedGraph.build(["a", "b"], [("a", "b")], {"x": ["a"]})
    with pytest.raises(StructureError):
        PartitionedGraph.build(["a", "b"], [("a", "b")], {"x": ["a", "b"], "y": ["b"]})


def test_partitioned_graph_from_structure_reads_colours():
    S = parse_structure("sig E/2 P_x/1 P_y/1\nuniverse a b\nrel E (a,b) (b,a)\n"
                        "rel P_x (a)\nrel P_y (b)\n")
    pg = PartitionedGraph.from_structure(S)
    assert pg.colours == ("x", "y")
    assert pg.graph.m == 1


def test_partitioned_graph_needs_symmetric_edges():
    S = parse_structure("sig E/2 P_x/1\nuniverse a b\nrel E (a,b)\nrel P_x (a) (b)\n")
    with pytest.raises(StructureError):
        PartitionedGraph.from_structure(S)


def test_reduct_drops_symbols():
    A = individualise(c4_structure())
    R = A.reduct(["E"])
    assert R.signature.names == ("E",)
    assert R.norm == 4


def test_random_structures_are_valid():
    rng = random.Random(1)
    for _ in range(20):
        A, B = random_instance(rng.randrange(10**6))
        assert A.signature == B.signature
