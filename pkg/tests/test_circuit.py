import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_circuit
from dreps import fixture
from dreps.circuit import (
    IN, PROD, UNION, BudgetExceeded, CircuitBuilder, CircuitError, CycleError, FactCircuit,
    Gate, check_deterministic, check_well_defined, flat_representation, format_circuit,
    materialise, named, normalize, parse_circuit, read_circuit, rebuild, relabel,
    structurally_deterministic, transversal,
)
from dreps.oracle import backtrack_homs
from dreps.relstruct import read_structure


@pytest.fixture(scope="module")
def hand():
    return read_circuit(fixture("triangle", "triangle.dcirc"))


def test_hand_circuit_sizes(hand):
    assert (hand.num_gates, hand.num_wires, hand.size) == (17, 17, 34)
    assert check_well_defined(hand) == []
    assert hand.is_normal()
    assert not hand.is_treelike()


def test_hand_circuit_represents_exactly_the_homomorphisms(hand):
    G = read_structure(fixture("triangle", "G.struct"))
    H = read_structure(fixture("triangle", "H.struct"))
    truth = backtrack_homs(G, H)
    assert len(truth) == 18
    assert materialise(hand) == truth


def test_hand_circuit_is_structurally_certified(hand):
    assert not hand.deterministic
    rep = check_deterministic(hand)
    assert (rep.status, rep.method) == ("certified", "structural")


def test_transversal_copies_the_shared_union(hand):
    T = transversal(hand)
    assert T.is_treelike()
    assert T.num_gates == hand.num_gates + 4
    assert materialise(T) == materialise(hand)


def test_transversal_budget(hand):
    with pytest.raises(BudgetExceeded):
        transversal(hand, budget=10)


def test_flat_representation_sizes(hand):
    homs = materialise(hand)
    F = flat_representation(homs, hand.left, hand.right)
    # 18 products of 3 inputs under one union
    assert F.size == (1 + 18 + 54) + (18 + 54) == 145
    assert F.is_treelike() and F.deterministic
    assert materialise(F) == homs
    one = flat_representation([((0, 1),)], ["x"], ["a", "b"])
    assert one.size == 5
    assert flat_representation([], ["x"], ["a"]).is_empty
    assert flat_representation([()], [], ["a"]).is_unit
    with pytest.raises(CircuitError):
        flat_representation([((1, 0),)], ["x", "y"], ["a"])


def test_overlap_and_domain_mismatch_are_reported():
    u = FactCircuit(("x", "y"), ("a",), (Gate(IN, (), 0, 0), Gate(IN, (), 1, 0),
                                         Gate(UNION, (0, 1))), 2)
    assert [v.kind for v in check_well_defined(u)] == ["domain-mismatch"]
    p = FactCircuit(("x",), ("a", "b"), (Gate(IN, (), 0, 0), Gate(IN, (), 0, 1),
                                         Gate(PROD, (0, 1))), 2)
    assert [v.kind for v in check_well_defined(p)] == ["overlap"]


def test_childless_and_dangling_gates_are_reported():
    C = FactCircuit(("x",), ("a",), (Gate(IN, (), 0, 0), Gate(UNION, ()), Gate(UNION, (0,))), 2)
    kinds = sorted(v.kind for v in check_well_defined(C))
    assert kinds == ["childless", "dangling"]


def test_cycles_are_rejected():
    C = FactCircuit(("x",), ("a",), (Gate(UNION, (1,)), Gate(UNION, (0,))), 0)
    with pytest.raises(CycleError):
        check_well_defined(C)


def test_union_of_same_input_twice_is_refuted():
    C = FactCircuit(("x",), ("a",), (Gate(IN, (), 0, 0), Gate(UNION, (0, 0))), 1)
    assert not structurally_deterministic(C)
    rep = check_deterministic(C)
    assert (rep.status, rep.gate, rep.witness) == ("refuted", 1, ((0, 0),))


def test_semantic_check_can_run_out_of_budget():
    # two products over x,y,z where the structural tests cannot separate the children
    b = CircuitBuilder(["x", "y"], ["a", "b"])
    ux = b.union([b.input(0, 0), b.input(0, 1)])
    uy = b.union([b.input(1, 0), b.input(1, 1)])
    p1 = b.product([ux, uy])
    p2 = b.product([b.union([b.input(0, 0)]), uy])
    C = b.build(b.union([p1, p2]))
    assert check_deterministic(C, budget=3).status == "unknown"
    assert check_deterministic(C).status == "refuted"


def test_normalize_contracts_and_splices():
    b = CircuitBuilder(["x"], ["a", "b", "c"])
    inner = b.union([b.input(0, 0), b.input(0, 1)])
    single = b.product([b.input(0, 2)])
    C = b.build(b.union([inner, single]))
    assert not C.is_normal()
    N = normalize(C)
    assert N.is_normal()
    assert N.num_gates == 4 and N.num_wires == 3
    assert materialise(N) == materialise(C)


def test_normal_circuit_is_left_unchanged(hand):
    N = normalize(hand)
    assert format_circuit(N) == format_circuit(hand)


def test_diamond_sharing_is_kept_and_counted_once():
    b = CircuitBuilder(["x", "y", "z"], ["a", "b"])
    shared = b.union([b.input(0, 0), b.input(0, 1)])
    left = b.product([shared, b.input(1, 0)])
    right = b.product([shared, b.input(1, 1)])
    top = b.union([left, right])
    C = b.build(b.product([top, b.input(2, 0)]))
    assert not C.is_treelike()
    assert len(materialise(C)) == 4
    assert check_deterministic(C).status == "certified"


def test_round_trip_and_parse_errors(hand):
    text = format_circuit(hand)
    again = parse_circuit(text)
    assert format_circuit(again) == text
    assert materialise(again) == materialise(hand)
    for bad in ("", "dcirc\ng1 IN x a\n", "dcirc\ng1 IN x a\ng1 IN x b\nsink g1\n",
                "dcirc\ng1 UNION g9\nsink g1\n", "dcirc left=2\ng1 IN x a\nsink g1\n"):
        with pytest.raises(CircuitError):
            parse_circuit(bad)
    assert parse_circuit("dcirc EMPTY left=1 right=0\nleft x\nright\n").is_empty


def test_relabel_and_named(hand):
    R = relabel(hand, ["p", "q", "r"], hand.right, {0: 2, 1: 1, 2: 0},
                {i: i for i in range(10)})
    h = min(materialise(R))
    assert set(named(R, h)) == {"p", "q", "r"}
    with pytest.raises(CircuitError):
        relabel(hand, hand.left, hand.right, {}, {})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_random_circuits_survive_transformations(seed):
    C = random_circuit(seed)
    assert check_well_defined(C) == []
    truth = materialise(C)
    T = transversal(C)
    assert T.is_treelike() and materialise(T) == truth
    N = normalize(C)
    assert N.is_normal() and materialise(N) == truth
    # splicing a shared union copies its wires, so only treelike inputs must shrink
    if C.is_treelike():
        assert N.size <= C.size
    assert normalize(T).size <= T.size
    assert materialise(parse_circuit(format_circuit(C))) == truth
    assert rebuild(C).size == C.size


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_structural_certificate_is_sound(seed):
    C = random_circuit(seed, share=0.5)
    report = check_deterministic(C)
    if structurally_deterministic(C):
        assert report.status == "certified"
    if report.status == "refuted":
        assert not structurally_deterministic(C)
        # the witness is represented by at least two children of the reported union
        kids = C.gates[report.gate].children
        hits = [c for c in kids
                if report.witness in materialise(FactCircuit(C.left, C.right, C.gates, c))]
        assert len(hits) >= 2 or len(set(kids)) < len(kids)
