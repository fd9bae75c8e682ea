"""Instance constructions and circuit recoveries that transfer representation bounds.

Each construction maps a right-hand instance to a new one (the forward map)
and comes with a way to turn circuits for the new instance back into circuits
for the original one (the backward map).
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .circuit import FactCircuit, relabel
from .query import _restrict_indices
from .relstruct import (
    COLOUR_PREFIX, Graph, PartitionedGraph, RelStructure, StructureError, _components,
    complete_graph, gaifman_graph, graph_structure, grid_graph,
)

__all__ = [
    "ReductionError", "AlmostMinorMap", "MapViolation", "validate_almost_minor",
    "grid_map", "lift_graph", "unlift_circuit", "gaifman_lift", "build_hstar",
    "hstar_name", "h_star", "representatives", "recover_circuit",
    "individualisation_restrict", "individualised_graph", "gaifman_individualised",
    "parse_map", "format_map", "read_map", "write_map",
]


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class AlmostMinorMap:
    """Sends every vertex of ``target`` to a set of one or two ``source`` vertices."""

    source: Graph
    target: Graph
    images: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(self.images) != len(self.target):
            raise ReductionError("need exactly one image per target vertex")
        n = len(self.source)
        for img in self.images:
            if any(not 0 <= x < n for x in img):
                raise ReductionError("image outside the source graph")

    @classmethod
    def from_named(cls, source: Graph, target: Graph,
                   mapping: Mapping[str, Iterable[str]]) -> "AlmostMinorMap":
        images = []
        for y in target.vertices:
            if y not in mapping:
                raise ReductionError(f"target vertex {y!r} has no image")
            img = set()
            for x in mapping[y]:
                if x not in source.index:
                    raise ReductionError(f"{x!r} is not a source vertex")
                img.add(source.index[x])
            images.append(frozenset(img))
        extra = set(mapping) - set(target.vertices)
        if extra:
            raise ReductionError(f"unknown target vertices {sorted(extra)[:3]}")
        return cls(source, target, tuple(images))

    def image(self, y: str) -> set[str]:
        return {self.source.vertices[x] for x in self.images[self.target.index[y]]}

    @property
    def is_minor_map(self) -> bool:
        return all(len(img) == 1 for img in self.images)


@dataclass(frozen=True)
class MapViolation:
    condition: int
    detail: str

    def __str__(self) -> str:
        return f"condition {self.condition}: {self.detail}"


def validate_almost_minor(m: AlmostMinorMap) -> list[MapViolation]:
    X, Y = m.source, m.target
    out: list[MapViolation] = []
    names_x, names_y = X.vertices, Y.vertices

    def show(img):
        return "{" + ", ".join(names_x[x] for x in sorted(img)) + "}"

    for y, img in enumerate(m.images):
        if len(img) not in (1, 2):
            out.append(MapViolation(1, f"{names_y[y]} maps to {len(img)} vertices"))
    single = {}
    for y, img in enumerate(m.images):
        if len(img) == 1:
            single.setdefault(next(iter(img)), []).append(y)
    for x in range(len(X)):
        if x not in single:
            out.append(MapViolation(2, f"no target vertex maps to exactly {{{names_x[x]}}}"))
    for i, j in sorted(X.edges):
        if not any(Y.has_edge(y, z) for y in single.get(i, ()) for z in single.get(j, ())):
            out.append(MapViolation(
                2, f"source edge {{{names_x[i]}, {names_x[j]}}} has no witnessing target edge"))
    for x in range(len(X)):
        members = [y for y, img in enumerate(m.images) if x in img]
        if not members:
            continue
        pos = {y: n for n, y in enumerate(members)}
        adj = [[pos[z] for z in Y.adj[y] if z in pos] for y in members]
        parts = _components(len(members), adj)
        if len(parts) > 1:
            out.append(MapViolation(
                3, f"vertices carrying {names_x[x]} split into {len(parts)} components"))
    for y, img in enumerate(m.images):
        if len(img) != 2:
            continue
        for z in sorted(Y.adj[y]):
            other = m.images[z]
            if not (len(other) == 1 and other <= img):
                out.append(MapViolation(
                    4, f"{names_y[z]} next to junction {names_y[y]} {show(img)} "
                       f"maps to {show(other)}"))
    return out


def grid_map(k: int) -> AlmostMinorMap:
    """K_k (vertices u1..uk) into the (2k-2) x (2k-2) grid (vertices v{i}_{j})."""
    if k < 2:
        raise ReductionError("grid map needs k >= 2")
    side = 2 * k - 2
    source = complete_graph(k, prefix="u")
    target = grid_graph(side)
    mapping = {}
    for i in range(1, side + 1):
        for j in range(1, side + 1):
            if j - 1 > i:
                img = {1}
            elif i % 2 and j % 2:
                img = {(j + 1) // 2}
            elif i % 2:
                img = {j // 2}
            elif j % 2:
                img = {(i + 2) // 2}
            else:
                img = {(i + 2) // 2, j // 2}
            mapping[f"v{i}_{j}"] = [f"u{a}" for a in sorted(img)]
    return AlmostMinorMap.from_named(source, target, mapping)


# -- partitioned-graph product --------------------------------------------------

def _require_connected(G: Graph, what: str) -> None:
    if len(G) and not G.is_connected():
        raise ReductionError(f"{what} must be connected")


def lift_graph(G: Graph, H: Graph) -> PartitionedGraph:
    """Vertices ``v@a``; ``v@a ~ u@b`` whenever v ~ u in H and a ~ b in G; class P_a = {v@a}."""
    _require_connected(G, "left graph")
    _require_connected(H, "right graph")
    name = [[f"{v}@{a}" for v in H.vertices] for a in G.vertices]
    vertices = [n for row in name for n in row]
    edges = []
    for a, b in sorted(G.edges):
        for v, u in sorted(H.edges):
            edges.append((name[a][v], name[b][u]))
            edges.append((name[a][u], name[b][v]))
    classes = {a: name[i] for i, a in enumerate(G.vertices)}
    return PartitionedGraph.build(vertices, edges, classes)


def unlift_circuit(C: FactCircuit, G: Graph, H: Graph) -> FactCircuit:
    """Relabel inputs ``a -> v@a`` to ``a -> v``: a circuit for Hom(G, H)."""
    if tuple(C.left) != tuple(G.vertices):
        raise ReductionError("circuit's left universe is not the left graph")
    names = {f"{v}@{a}": i for a in G.vertices for i, v in enumerate(H.vertices)}
    try:
        val_map = {j: names[r] for j, r in enumerate(C.right)}
    except KeyError as exc:
        raise ReductionError(f"{exc.args[0]!r} is not a lifted vertex") from None
    return relabel(C, G.vertices, H.vertices, {i: i for i in range(len(G))}, val_map)


# -- Gaifman reduction ------------------------------------------------------------

def _colour_check(A_universe: Sequence[str], H: PartitionedGraph) -> None:
    if set(H.colours) != set(A_universe):
        raise ReductionError("partition must be indexed by the left structure's elements")


def gaifman_lift(A_id: RelStructure, H: PartitionedGraph) -> RelStructure:
    """Structure over V(H) interpreting every non-colour symbol of arity t by all
    t-tuples whose distinct coordinates are pairwise adjacent in H."""
    _colour_check(A_id.universe, H)
    colour_syms = {COLOUR_PREFIX + a for a in A_id.universe}
    if not all(A_id.signature.arity.get(s) == 1 for s in colour_syms):
        raise ReductionError("left structure is not individualised")
    adj = H.graph.adj
    n = len(H.vertices)
    rels: dict[str, frozenset] = {}
    for sym, r in A_id.signature:
        if sym in colour_syms:
            rels[sym] = H.structure.relations[sym]
            continue
        found: list[tuple[int, ...]] = []

        def extend(prefix: list[int], distinct: list[int]) -> None:
            if len(prefix) == r:
                found.append(tuple(prefix))
                return
            if distinct:
                common = set(adj[distinct[0]])
                for d in distinct[1:]:
                    common &= adj[d]
                cands = sorted(set(distinct) | common)
            else:
                cands = range(n)
            for c in cands:
                prefix.append(c)
                extend(prefix, distinct if c in distinct else distinct + [c])
                prefix.pop()

        extend([], [])
        rels[sym] = frozenset(found)
    return RelStructure(A_id.signature, H.vertices, rels)


# -- almost-minor construction -------------------------------------------------

def hstar_name(y: str, values: Sequence[str]) -> str:
    return "v@" + y + "@" + "+".join(values)


def _check_partition(m: AlmostMinorMap, H: PartitionedGraph) -> None:
    problems = validate_almost_minor(m)
    if problems:
        raise ReductionError("invalid almost-minor map: " + "; ".join(map(str, problems)))
    _colour_check(m.source.vertices, H)


def _classes(m: AlmostMinorMap, H: PartitionedGraph):
    """Per target vertex: list of (vertex name, tuple of H indices) in canonical order."""
    hv = H.vertices
    P = {x: H.cls(xn) for x, xn in enumerate(m.source.vertices)}
    out = []
    for y, yn in enumerate(m.target.vertices):
        img = sorted(m.images[y])
        if len(img) == 1:
            out.append([(hstar_name(yn, [hv[a]]), (a,)) for a in P[img[0]]])
        else:
            pairs = sorted(tuple(sorted((a, b))) for a in P[img[0]] for b in P[img[1]])
            out.append([(hstar_name(yn, [hv[a], hv[b]]), (a, b)) for a, b in pairs])
    return out


def build_hstar(m: AlmostMinorMap, H: PartitionedGraph) -> PartitionedGraph:
    """Target-partitioned graph whose colour-respecting homomorphisms from the
    target graph correspond one-to-one to those from the source graph into H."""
    _check_partition(m, H)
    classes = _classes(m, H)
    Hg = H.graph
    edges: list[tuple[str, str]] = []
    for y, z in sorted(m.target.edges):
        My, Mz = m.images[y], m.images[z]
        if len(My) == 2:
            y, z, My, Mz = z, y, Mz, My
        if len(My) == 1 and len(Mz) == 1:
            (x,), (x2,) = My, Mz
            if x == x2:
                by_val = {vals: n for n, vals in classes[z]}
                edges += [(n, by_val[vals]) for n, vals in classes[y]]
            elif m.source.has_edge(x, x2):
                edges += [(n1, n2) for n1, (a,) in classes[y] for n2, (b,) in classes[z]
                          if Hg.has_edge(a, b)]
            else:
                edges += [(n1, n2) for n1, _ in classes[y] for n2, _ in classes[z]]
        elif len(My) == 1:
            # singleton next to a junction; validity forces My inside Mz
            edges += [(n1, n2) for n1, (a,) in classes[y] for n2, pair in classes[z] if a in pair]
        else:
            raise ReductionError("two adjacent junction vertices")
    vertices = [n for cls in classes for n, _ in cls]
    colour = {yn: [n for n, _ in classes[y]] for y, yn in enumerate(m.target.vertices)}
    return PartitionedGraph.build(vertices, edges, colour)


def h_star(m: AlmostMinorMap, H: PartitionedGraph, h: Mapping[str, str]) -> dict[str, str]:
    """The target-side mapping induced by a source-side mapping ``h`` (names)."""
    hv_index = H.structure.index
    out = {}
    for y, yn in enumerate(m.target.vertices):
        vals = sorted((h[m.source.vertices[x]] for x in m.images[y]), key=hv_index.__getitem__)
        out[yn] = hstar_name(yn, vals)
    return out


def representatives(m: AlmostMinorMap) -> dict[int, int]:
    """For every source vertex, the first target vertex mapped to exactly it."""
    rep: dict[int, int] = {}
    for y, img in enumerate(m.images):
        if len(img) == 1:
            rep.setdefault(next(iter(img)), y)
    return rep


def recover_circuit(m: AlmostMinorMap, C: FactCircuit, H: PartitionedGraph,
                    stats: dict | None = None) -> FactCircuit:
    """Project onto one representative per source vertex, then rename back to H."""
    from .query import project

    Hs = build_hstar(m, H)
    if tuple(C.left) != m.target.vertices or tuple(C.right) != Hs.vertices:
        raise ReductionError("circuit universes do not match the constructed instance")
    rep = representatives(m)
    X = m.source.vertices
    keep = [m.target.vertices[rep[x]] for x in range(len(X))]
    P = project(C, keep, stats)
    var_map = {rep[x]: x for x in range(len(X))}
    hv = H.vertices
    rindex = Hs.structure.index
    val_map = {}
    for x in range(len(X)):
        yn = m.target.vertices[rep[x]]
        for a in H.cls(X[x]):
            val_map[rindex[hstar_name(yn, [hv[a]])]] = a
    return relabel(P, X, hv, var_map, val_map, deterministic=False)


# -- individualisation ---------------------------------------------------------------

def individualisation_restrict(C: FactCircuit, Cst: RelStructure,
                               stats: dict | None = None) -> FactCircuit:
    """Keep mappings sending each left element a into its colour class ``P_a``."""
    if tuple(C.right) != Cst.universe:
        raise ReductionError("circuit's right universe is not the coloured structure's")
    owner: dict[int, str] = {}
    allowed: dict[int, set[int]] = {}
    for i, a in enumerate(C.left):
        sym = COLOUR_PREFIX + a
        if Cst.signature.arity.get(sym) != 1:
            raise ReductionError(f"coloured structure lacks unary symbol {sym!r}")
        members = {v for (v,) in Cst.relations[sym]}
        for v in members:
            if v in owner:
                raise ReductionError(
                    f"{Cst.universe[v]!r} carries colours {owner[v]!r} and {a!r}")
            owner[v] = a
        allowed[i] = members
    if len(owner) != len(Cst):
        raise ReductionError("colour classes do not cover the universe")
    return _restrict_indices(C, allowed, stats)


# -- .am text format --------------------------------------------------------------

def _pairs(tokens: Sequence[str]) -> list[tuple[str, str]]:
    out = []
    for tok in tokens:
        if not (tok.startswith("(") and tok.endswith(")")) or tok.count(",") != 1:
            raise ReductionError(f"bad edge token {tok!r}")
        a, b = tok[1:-1].split(",")
        out.append((a.strip(), b.strip()))
    return out


def parse_map(text: str) -> AlmostMinorMap:
    """Parse ``xvertices``/``xedges``/``yvertices``/``yedges`` lines and
    ``y -> x`` or ``y -> x1,x2`` lines."""
    xv: list[str] = []
    yv: list[str] = []
    xe: list[tuple[str, str]] = []
    ye: list[tuple[str, str]] = []
    mapping: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            y, _, xs = line.partition("->")
            y = y.strip()
            if y in mapping:
                raise ReductionError(f"{y!r} mapped twice")
            mapping[y] = [x.strip() for x in xs.split(",") if x.strip()]
            continue
        key, *rest = line.split()
        if key == "xvertices":
            xv += rest
        elif key == "yvertices":
            yv += rest
        elif key == "xedges":
            xe += _pairs(rest)
        elif key == "yedges":
            ye += _pairs(rest)
        else:
            raise ReductionError(f"unknown line {line!r}")
    try:
        source, target = Graph.from_named(xv, xe), Graph.from_named(yv, ye)
    except StructureError as exc:
        raise ReductionError(str(exc)) from None
    return AlmostMinorMap.from_named(source, target, mapping)


def format_map(m: AlmostMinorMap) -> str:
    def edges(G: Graph) -> str:
        return " ".join(f"({G.vertices[i]},{G.vertices[j]})" for i, j in sorted(G.edges))

    lines = ["xvertices " + " ".join(m.source.vertices), "xedges " + edges(m.source),
             "yvertices " + " ".join(m.target.vertices), "yedges " + edges(m.target)]
    for y, yn in enumerate(m.target.vertices):
        lines.append(f"{yn} -> " + ",".join(m.source.vertices[x] for x in sorted(m.images[y])))
    return "\n".join(ln.rstrip() for ln in lines) + "\n"


def read_map(path) -> AlmostMinorMap:
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read())


def write_map(m: AlmostMinorMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_map(m))


def individualised_graph(G: Graph) -> RelStructure:
    """``G^id``: the edge structure of G with one singleton colour per vertex."""
    return graph_structure(G, {v: [v] for v in G.vertices})


def gaifman_individualised(A: RelStructure) -> RelStructure:
    return individualised_graph(gaifman_graph(A))

