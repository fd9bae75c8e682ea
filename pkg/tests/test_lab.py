import io
import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dreps.circuit import materialise
from dreps.compile import compile_hom
from dreps.lab import (
    SCHEMA, RandomGraphSpec, biclique_cover_cost, ck_reference, clique_counts, count_cliques,
    experiment_random_graphs, experiment_size_scaling, find_biclique, fit_slope, gen_random_graph,
    summarise_random_graphs, write_rows,
)
from dreps.oracle import backtrack_homs
from dreps.query import count
from dreps.relstruct import (
    Graph, complete_bipartite_graph, complete_graph, cycle_graph, graph_structure, path_graph,
)


def brute_cliques(G: Graph, k: int) -> int:
    return sum(all(G.has_edge(u, v) for u, v in combinations(S, 2))
               for S in combinations(range(len(G)), k))


def brute_cover_cost(G: Graph) -> int:
    """Cheapest biclique cover by trying every family of bicliques, smallest first."""
    edges = {frozenset(e) for e in G.edges}
    n = len(G)
    bicliques = []
    for mask in range(1, 3 ** n):
        side, digits = {1: [], 2: []}, mask
        for v in range(n):
            digits, d = divmod(digits, 3)
            if d:
                side[d].append(v)
        S, T = side[1], side[2]
        if S and T and min(S) < min(T) and all(G.has_edge(s, t) for s in S for t in T):
            bicliques.append((len(S) + len(T), {frozenset((s, t)) for s in S for t in T}))
    best = math.inf
    for r in range(1, len(edges) + 1):
        for fam in combinations(bicliques, r):
            cost = sum(c for c, _ in fam)
            if cost < best and set().union(*(es for _, es in fam)) == edges:
                best = cost
        if best < math.inf and r * 2 > best:
            break
    return best


def hom_k2(G: Graph):
    return backtrack_homs(graph_structure(complete_graph(2)), graph_structure(G))


def test_random_graphs_are_reproducible():
    spec = RandomGraphSpec(20, seed=7)
    assert gen_random_graph(spec) == gen_random_graph(spec)
    assert gen_random_graph(spec) != gen_random_graph(RandomGraphSpec(20, seed=8))
    single = gen_random_graph(RandomGraphSpec(1))
    assert len(single) == 1 and single.m == 0
    with pytest.raises(ValueError):
        gen_random_graph(RandomGraphSpec(0))


def test_edge_counts_follow_the_binomial_law():
    ms = [gen_random_graph(RandomGraphSpec(64, seed=s)).m for s in range(200)]
    mean = sum(ms) / len(ms)
    sd_of_mean = math.sqrt(2016 * 0.25 / len(ms))
    assert abs(mean - 1008) <= 3 * sd_of_mean


def test_clique_counts_on_small_graphs():
    assert count_cliques(complete_graph(5), 3) == 10
    assert count_cliques(cycle_graph(5), 3) == 0
    assert clique_counts(complete_graph(5), 5) == [1, 5, 10, 10, 5, 1]
    with pytest.raises(ValueError):
        count_cliques(complete_graph(3), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 14), st.integers(0, 10**6))
def test_clique_counts_match_brute_force_and_bound(n, seed):
    G = gen_random_graph(RandomGraphSpec(n, seed=seed))
    counts = clique_counts(G, 5)
    for k in range(1, 6):
        assert counts[k] == brute_cliques(G, k)
    for k in range(2, 6):
        assert counts[k] <= G.m ** (k / 2)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_compiled_clique_homs_are_ordered_cliques(k):
    G = gen_random_graph(RandomGraphSpec(12, seed=k))
    C = compile_hom(graph_structure(complete_graph(k)), graph_structure(G))
    assert count(C) == math.factorial(k) * count_cliques(G, k)


def test_find_biclique_small_cases():
    res = find_biclique(cycle_graph(4), 2)
    assert res.status == "found"
    assert len(res.left) == len(res.right) == 2
    assert find_biclique(cycle_graph(5), 2).status == "none"
    for seed in range(10):
        assert find_biclique(gen_random_graph(RandomGraphSpec(8, seed=seed)), 4).status == "none"


def test_find_biclique_witness_is_complete():
    G = complete_bipartite_graph(3, 4)
    res = find_biclique(G, 3)
    assert res.status == "found"
    assert all(G.has_edge(G.index[s], G.index[t]) for s in res.left for t in res.right)


def test_find_biclique_reports_inconclusive_past_budget():
    G = gen_random_graph(RandomGraphSpec(128, seed=0))
    assert find_biclique(G, math.ceil(3 * math.log2(128)), budget=20_000).status == "inconclusive"


@pytest.mark.parametrize("G, cost", [
    (complete_bipartite_graph(3, 3), 6),
    (complete_graph(3), 5),
    (complete_bipartite_graph(1, 4), 5),
    (cycle_graph(4), 4),
    (cycle_graph(5), 8),
    (path_graph(4), 5),
])
def test_biclique_cover_costs_match_exhaustive_search(G, cost):
    res = biclique_cover_cost(G)
    assert res.exact
    assert res.cost == cost == brute_cover_cost(G)
    assert materialise(res.circuit) == hom_k2(G)
    # one input per side vertex, in both orientations
    assert sum(1 for g in res.circuit.gates if g.kind == "IN") == 2 * cost


@pytest.mark.parametrize("seed", range(5))
def test_greedy_cover_circuits_are_exact(seed):
    G = gen_random_graph(RandomGraphSpec(32, seed=seed))
    res = biclique_cover_cost(G)
    assert not res.exact
    assert materialise(res.circuit) == hom_k2(G)
    assert res.cost <= 2 * G.m


def test_empty_graph_cover():
    res = biclique_cover_cost(Graph(("a",), frozenset()))
    assert res.cost == 0 and res.circuit.is_empty


def test_lemma_rows_and_summary():
    rows = experiment_random_graphs([32], range(10), biclique=False)
    assert len(rows) == 10
    assert all(r["m"] == gen_random_graph(RandomGraphSpec(32, seed=r["seed"])).m for r in rows)
    summary = summarise_random_graphs(rows)[32]
    assert summary["triangle_expected"] == 620
    assert summary["clique_bound_ok"]
    assert rows == experiment_random_graphs([32], range(10), biclique=False)
    assert "runtime_s" not in rows[0]
    assert ck_reference(3) == pytest.approx(1 / 96)


def test_scaling_rows_and_flat_sizes():
    rows = experiment_size_scaling("clique", targets=(60, 120), seed=1)
    for r in rows:
        G = gen_random_graph(RandomGraphSpec(r["n_right"], seed=1))
        tri = count_cliques(G, 3)
        assert r["hom_count"] == 6 * tri
        assert r["flat_size"] == 1 + r["hom_count"] * 8
    with pytest.raises(ValueError):
        experiment_size_scaling("star")


def test_edge_family_counts_twice_the_edges():
    for seed in range(5):
        G = gen_random_graph(RandomGraphSpec(15, seed=seed))
        C = compile_hom(graph_structure(complete_graph(2)), graph_structure(G))
        assert count(C) == 2 * G.m


def test_fit_slope():
    rows = [{"right_norm": x, "circuit_size": 3 * x ** 2} for x in (10, 100, 1000)]
    assert fit_slope(rows) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        fit_slope(rows[:1])


def test_csv_has_schema_line():
    buf = io.StringIO()
    write_rows([{"a": 1, "b": 2}], buf)
    assert buf.getvalue().splitlines() == [f"# schema={SCHEMA}", "a,b", "1,2"]
    empty = io.StringIO()
    write_rows([], empty)
    assert empty.getvalue() == "# schema=1\n"
