"""Desk-scale experiments: random graphs, clique and biclique statistics, size scaling.

Random graphs use Python's ``random.Random`` (Mersenne Twister MT19937)
seeded with the given integer; pair {i, j} (i < j, lexicographic order) is an
edge iff the next draw is below the edge probability.  That makes every
row reproducible from (graph parameters, seed, code version).
"""
from __future__ import annotations

import csv
import math
import random
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import IO

import numpy as np

from .circuit import CircuitBuilder, FactCircuit, normalize
from .compile import compile_hom, size_bound_check
from .decomp import decompose_structure, make_plan
from .query import count
from .relstruct import (
    Graph, RelStructure, complete_graph, cycle_graph, graph_structure, grid_graph, path_graph,
)

__all__ = [
    "SCHEMA", "RandomGraphSpec", "gen_random_graph", "clique_counts", "count_cliques",
    "BicliqueResult", "find_biclique", "experiment_random_graphs", "summarise_random_graphs",
    "FAMILIES", "family_structure", "experiment_size_scaling", "fit_slope",
    "CoverResult", "biclique_cover_cost", "write_rows", "ck_reference",
]

SCHEMA = 1


@dataclass(frozen=True)
class RandomGraphSpec:
    n: int
    p: Fraction | float = Fraction(1, 2)
    seed: int = 0


def gen_random_graph(spec: RandomGraphSpec) -> Graph:
    if spec.n < 1:
        raise ValueError("random graph needs n >= 1")
    rng = random.Random(spec.seed)
    p = float(spec.p)
    edges = frozenset((i, j) for i in range(spec.n) for j in range(i + 1, spec.n)
                      if rng.random() < p)
    return Graph(tuple(f"v{i}" for i in range(1, spec.n + 1)), edges)


def _forward_masks(G: Graph) -> list[int]:
    masks = []
    for v in range(len(G)):
        m = 0
        for u in G.adj[v]:
            if u > v:
                m |= 1 << u
        masks.append(m)
    return masks


def clique_counts(G: Graph, kmax: int) -> list[int]:
    """``out[k]`` is the number of k-cliques for 0 <= k <= kmax."""
    out = [0] * (kmax + 1)
    out[0] = 1
    if kmax == 0:
        return out
    out[1] = len(G)
    if kmax == 1:
        return out
    fwd = _forward_masks(G)

    def grow(cand: int, size: int) -> None:
        # cand: common forward neighbours of the current clique of this size
        out[size + 1] += cand.bit_count()
        if size + 1 == kmax:
            return
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            grow(cand & fwd[v], size + 1)

    for v in range(len(G)):
        grow(fwd[v], 1)
    return out


def count_cliques(G: Graph, k: int) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    return clique_counts(G, k)[k]


def ck_reference(k: int) -> float:
    """Reference constant 2^-(C(k,2)+1) / k! for the k-clique count line."""
    return 2.0 ** -(math.comb(k, 2) + 1) / math.factorial(k)


# -- bicliques ----------------------------------------------------------------------

@dataclass(frozen=True)
class BicliqueResult:
    status: str  # found | none | inconclusive
    left: tuple[str, ...] = ()
    right: tuple[str, ...] = ()
    nodes: int = 0


def _adj_masks(G: Graph) -> list[int]:
    return [sum(1 << u for u in G.adj[v]) for v in range(len(G))]


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def find_biclique(G: Graph, a: int, budget: int = 200_000) -> BicliqueResult:
    """Look for disjoint a-sets S, T with every S-T pair adjacent.

    Exact branch-and-bound over S (a candidate survives only while its common
    neighbourhood still has a vertices); past ``budget`` search nodes a greedy
    heuristic takes over and failure is reported as inconclusive.
    """
    if a < 1:
        raise ValueError("a must be at least 1")
    n = len(G)
    adj = _adj_masks(G)
    names = G.vertices
    full = (1 << n) - 1
    nodes = 0

    class _Stop(Exception):
        pass

    def witness(S: list[int], common: int) -> BicliqueResult:
        T = _bits(common)[:a]
        return BicliqueResult("found", tuple(names[v] for v in S),
                              tuple(names[v] for v in T), nodes)

    def search(S: list[int], start: int, common: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Stop
        if len(S) == a:
            return S[:], common
        for v in range(start, n):
            if n - v < a - len(S):
                break
            nc = common & adj[v]
            if nc.bit_count() >= a:
                S.append(v)
                hit = search(S, v + 1, nc)
                S.pop()
                if hit:
                    return hit
        return None

    try:
        hit = search([], 0, full)
    except _Stop:
        hit = False
    if hit:
        return witness(*hit)
    if hit is None:
        return BicliqueResult("none", nodes=nodes)
    # greedy: grow S from each seed by the vertex keeping the most common neighbours
    for seed in range(n):
        S, common = [seed], adj[seed]
        while len(S) < a:
            best, best_c = -1, -1
            for v in range(n):
                if v in S:
                    continue
                c = (common & adj[v]).bit_count()
                if c > best_c:
                    best, best_c = v, c
            if best_c < a:
                break
            S.append(best)
            common &= adj[best]
        if len(S) == a and common.bit_count() >= a:
            return witness(sorted(S), common)
    return BicliqueResult("inconclusive", nodes=nodes)


# -- random graph experiment ----------------------------------------------------

RANDOM_GRAPH_COLUMNS = ["n", "seed", "m", "m_ok", "triangles", "triangle_ratio_n3",
                 "triangle_expected", "clique_bound_ok", "biclique_a", "biclique_status"]


def experiment_random_graphs(n_values: Iterable[int], seeds: Iterable[int], kmax: int = 5,
                       biclique_budget: int = 20_000, biclique: bool = True,
                       timing: bool = False) -> list[dict]:
    """Edge, triangle, clique-bound and biclique measurements for G(n, 1/2)."""
    rows = []
    seeds = list(seeds)
    for n in n_values:
        for seed in seeds:
            t0 = time.perf_counter()
            G = gen_random_graph(RandomGraphSpec(n, Fraction(1, 2), seed))
            m = G.m
            counts = clique_counts(G, kmax)
            bound_ok = all(counts[k] <= m ** (k / 2) for k in range(2, kmax + 1))
            a = math.ceil(3 * math.log2(n)) if n > 1 else 1
            status = find_biclique(G, a, biclique_budget).status if biclique else "skipped"
            row = {
                "n": n, "seed": seed, "m": m, "m_ok": int(8 * m >= n * n),
                "triangles": counts[3] if kmax >= 3 else "",
                "triangle_ratio_n3": f"{counts[3] / n ** 3:.6f}" if kmax >= 3 else "",
                "triangle_expected": f"{math.comb(n, 3) / 8:.2f}",
                "clique_bound_ok": int(bound_ok),
                "biclique_a": a, "biclique_status": status,
            }
            for k in range(1, kmax + 1):
                row[f"cliques_{k}"] = counts[k]
            if timing:
                row["runtime_s"] = f"{time.perf_counter() - t0:.4f}"
            rows.append(row)
    return rows


def summarise_random_graphs(rows: Sequence[dict]) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for n in sorted({r["n"] for r in rows}):
        sel = [r for r in rows if r["n"] == n]
        tri = [r["triangles"] for r in sel]
        mean = sum(tri) / len(tri)
        expected = math.comb(n, 3) / 8
        out[n] = {
            "seeds": len(sel),
            "m_ok_rate": sum(r["m_ok"] for r in sel) / len(sel),
            "triangle_mean": mean,
            "triangle_expected": expected,
            "triangle_rel_error": abs(mean - expected) / expected,
            "clique_bound_ok": all(r["clique_bound_ok"] for r in sel),
            "ck_reference_3": ck_reference(3),
        }
    return out


# -- size scaling ----------------------------------------------------------------

FAMILIES = {
    "path": lambda: path_graph(6),
    "cycle": lambda: cycle_graph(6),
    "grid": lambda: grid_graph(2, 3),
    "clique": lambda: complete_graph(3),
}

SCALING_COLUMNS = ["family", "left_size", "width", "target", "n_right", "right_norm",
                   "circuit_size", "hom_count", "flat_size", "ratio"]


def family_structure(family: str) -> RelStructure:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    return graph_structure(FAMILIES[family]())


def experiment_size_scaling(family: str, targets: Sequence[int] = (100, 200, 400, 800, 1600),
                            p: Fraction | float = Fraction(1, 2), seed: int = 0,
                            method: str = "minfill", timing: bool = False) -> list[dict]:
    """Compile Hom(A, G(n, p)) with n chosen so that the right size is near each target."""
    A = family_structure(family)
    plan = make_plan(A, decompose_structure(A, method))
    rows = []
    for target in targets:
        t0 = time.perf_counter()
        # n(n-1)p ordered edge tuples expected
        n = max(2, round((1 + math.sqrt(1 + 4 * target / float(p))) / 2))
        B = graph_structure(gen_random_graph(RandomGraphSpec(n, p, seed)))
        C = compile_hom(A, B, plan)
        homs = count(C)
        report = size_bound_check(A, B, plan, C)
        row = {
            "family": family, "left_size": len(A), "width": plan.decomposition.width,
            "target": target, "n_right": n, "right_norm": B.norm,
            "circuit_size": C.size, "hom_count": homs,
            "flat_size": 1 + homs * (2 * len(A) + 2) if homs else 0,
            "ratio": f"{report.ratio:.6g}",
        }
        if timing:
            row["runtime_s"] = f"{time.perf_counter() - t0:.4f}"
        rows.append(row)
    return rows


def fit_slope(rows: Sequence[dict], x: str = "right_norm", y: str = "circuit_size") -> float:
    """Least-squares slope of log y against log x."""
    pts = [(r[x], r[y]) for r in rows if r[x] and r[y]]
    if len(pts) < 2:
        raise ValueError("need at least two nonzero rows to fit a slope")
    xs = np.log([float(a) for a, _ in pts])
    ys = np.log([float(b) for _, b in pts])
    return float(np.polyfit(xs, ys, 1)[0])


# -- biclique covers ---------------------------------------------------------------

@dataclass(frozen=True)
class CoverResult:
    cost: int
    cover: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    exact: bool
    circuit: FactCircuit


def _edge_ids(G: Graph) -> dict[tuple[int, int], int]:
    return {e: i for i, e in enumerate(sorted(G.edges))}


def _biclique_mask(S, T, eid) -> int:
    m = 0
    for s in S:
        for t in T:
            m |= 1 << eid[(min(s, t), max(s, t))]
    return m


def _exact_cover(G: Graph, eid) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    adj = _adj_masks(G)
    verts = sorted({v for e in G.edges for v in e})
    best: dict[int, tuple[int, tuple, tuple]] = {}

    def sides(S: tuple[int, ...], common: int) -> None:
        # every T inside the common neighbourhood; min(S) < min(T) avoids mirror images
        cands = [v for v in _bits(common) if v > S[0]]
        for q in range(1, len(cands) + 1):
            for T in combinations(cands, q):
                mask = _biclique_mask(S, T, eid)
                cost = len(S) + len(T)
                if mask not in best or cost < best[mask][0]:
                    best[mask] = (cost, S, T)
        for v in verts:
            if v > S[-1] and common & adj[v]:
                sides(S + (v,), common & adj[v])

    for v in verts:
        sides((v,), adj[v])
    full = (1 << len(eid)) - 1
    by_edge: list[list[tuple[int, int, tuple, tuple]]] = [[] for _ in eid]
    for mask, (cost, S, T) in best.items():
        for e in _bits(mask):
            by_edge[e].append((mask, cost, S, T))
    INF = float("inf")
    dp = [INF] * (full + 1)
    choice: list = [None] * (full + 1)
    dp[0] = 0
    for mask in range(full + 1):
        if dp[mask] == INF or mask == full:
            continue
        e = ((~mask) & full & -((~mask) & full)).bit_length() - 1
        for cmask, cost, S, T in by_edge[e]:
            nm = mask | cmask
            if dp[mask] + cost < dp[nm]:
                dp[nm] = dp[mask] + cost
                choice[nm] = (mask, S, T)
    out = []
    mask = full
    while mask:
        prev, S, T = choice[mask]
        out.append((S, T))
        mask = prev
    return sorted(out)


def _greedy_cover(G: Graph, eid) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    adj = _adj_masks(G)
    n = len(G)
    cands: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    for v in range(n):
        if adj[v]:
            cands.add(((v,), tuple(_bits(adj[v]))))
    for u in range(n):
        for w in range(u + 1, n):
            common = adj[u] & adj[w]
            if common.bit_count() >= 2:
                cands.add(((u, w), tuple(_bits(common))))
    # grow a biclique greedily from every vertex
    for v in range(n):
        S, common = [v], adj[v]
        while True:
            best, best_gain = -1, 0
            for u in range(n):
                if u in S:
                    continue
                c = (common & adj[u]).bit_count()
                gain = (len(S) + 1) * c - len(S) * common.bit_count()
                if c >= 2 and gain > best_gain:
                    best, best_gain = u, gain
            if best < 0:
                break
            S.append(best)
            common &= adj[best]
        if len(S) > 1:
            cands.add((tuple(sorted(S)), tuple(_bits(common))))
    cand_list = sorted(cands)
    masks = [_biclique_mask(S, T, eid) for S, T in cand_list]
    full = (1 << len(eid)) - 1
    covered = 0
    out = []
    while covered != full:
        best_i, best_r = -1, -1.0
        for i, (S, T) in enumerate(cand_list):
            new = (masks[i] & ~covered).bit_count()
            if new:
                r = new / (len(S) + len(T))
                if r > best_r:
                    best_i, best_r = i, r
        S, T = cand_list[best_i]
        # trim vertices that add nothing new
        T = tuple(t for t in T if _biclique_mask(S, (t,), eid) & ~covered)
        S = tuple(s for s in S if _biclique_mask((s,), T, eid) & ~covered)
        covered |= _biclique_mask(S, T, eid)
        out.append((S, T))
    return out


def biclique_cover_cost(G: Graph, exact_edge_limit: int = 12) -> CoverResult:
    """Cover E(G) by bicliques minimising the summed side sizes, and emit the
    matching treelike circuit for Hom(K_2, G) (both orientations per biclique)."""
    eid = _edge_ids(G)
    exact = len(eid) <= exact_edge_limit
    cover = (_exact_cover(G, eid) if exact else _greedy_cover(G, eid)) if eid else []
    cost = sum(len(S) + len(T) for S, T in cover)
    K2 = complete_graph(2)
    if not cover:
        circuit = FactCircuit.empty(K2.vertices, G.vertices)
    else:
        b = CircuitBuilder(K2.vertices, G.vertices, share_inputs=False)
        prods = []
        for S, T in cover:
            for first, second in ((S, T), (T, S)):
                prods.append(b.product([b.union([b.input(0, v) for v in first]),
                                        b.union([b.input(1, v) for v in second])]))
        circuit = normalize(b.build(b.union(prods), deterministic=False))
    names = G.vertices
    named = tuple((tuple(names[v] for v in S), tuple(names[v] for v in T)) for S, T in cover)
    return CoverResult(cost, named, exact, circuit)


# -- CSV ----------------------------------------------------------------------------

def write_rows(rows: Sequence[dict], fh: IO[str], columns: Sequence[str] | None = None) -> None:
    """CSV with a ``# schema=1`` first line; columns fixed by the first row unless given."""
    fh.write(f"# schema={SCHEMA}\n")
    if not rows:
        return
    cols = list(columns) if columns is not None else list(rows[0])
    w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
