"""Finite relational structures, graphs and partitioned graphs.

Elements are named by strings at the file boundary and interned to dense
integers (their position in ``universe``) everywhere else.  Tuples inside
relations always hold those integer indices.
"""
from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

__all__ = [
    "StructureError",
    "Signature",
    "RelStructure",
    "Graph",
    "PartitionedGraph",
    "COLOUR_PREFIX",
    "EDGE",
    "gaifman_graph",
    "individualise",
    "connected_components",
    "graph_structure",
    "structure_graph",
    "parse_structure",
    "format_structure",
    "read_structure",
    "write_structure",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "grid_graph",
    "complete_bipartite_graph",
]

COLOUR_PREFIX = "P_"
EDGE = "E"

_NAME = re.compile(r"^[^\s(),#]+$")


class StructureError(ValueError):
    """Raised for malformed structures, graphs or structure files."""


def _check_name(name: str) -> str:
    if not isinstance(name, str) or not _NAME.match(name):
        raise StructureError(f"invalid element or symbol name {name!r}")
    return name


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for name, arity in self.symbols:
            _check_name(name)
            if name in seen:
                raise StructureError(f"duplicate symbol {name!r}")
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"symbol {name!r} has arity {arity!r}, need >= 1")
            seen.add(name)

    @cached_property
    def arity(self) -> dict[str, int]:
        return dict(self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def __contains__(self, name: object) -> bool:
        return name in self.arity

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def extend(self, extra: Iterable[tuple[str, int]]) -> "Signature":
        return Signature(self.symbols + tuple(extra))


@dataclass(frozen=True)
class RelStructure:
    """A finite relational structure over integer-interned elements.

    ``relations[R]`` is a frozenset of tuples of universe indices.  Use
    :meth:`from_named` to build one from element names.
    """

    signature: Signature
    universe: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.universe)) != len(self.universe):
            raise StructureError("duplicate universe element")
        for name in self.universe:
            _check_name(name)
        rels = {}
        n = len(self.universe)
        for sym, arity in self.signature:
            tuples = frozenset(self.relations.get(sym, ()))
            for t in tuples:
                if len(t) != arity:
                    raise StructureError(
                        f"tuple {t} of {sym} has length {len(t)}, arity is {arity}")
                for x in t:
                    if not (isinstance(x, int) and 0 <= x < n):
                        raise StructureError(f"tuple {t} of {sym} leaves the universe")
            rels[sym] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise StructureError(f"relations for undeclared symbols: {sorted(extra)}")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def from_named(
        cls,
        symbols: Sequence[tuple[str, int]],
        universe: Sequence[str],
        relations: Mapping[str, Iterable[Sequence[str]]],
    ) -> "RelStructure":
        index = {u: i for i, u in enumerate(universe)}
        rels = {}
        for sym, tuples in relations.items():
            try:
                rels[sym] = frozenset(tuple(index[x] for x in t) for t in tuples)
            except KeyError as exc:
                raise StructureError(f"element {exc.args[0]!r} of {sym} not in universe") from None
        return cls(Signature(tuple(symbols)), tuple(universe), rels)

    @cached_property
    def index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.universe)}

    @property
    def norm(self) -> int:
        """Size measure: total number of tuples over all relations."""
        return sum(len(t) for t in self.relations.values())

    def __len__(self) -> int:
        return len(self.universe)

    def tuples(self) -> Iterable[tuple[str, tuple[int, ...]]]:
        """All (symbol, tuple) pairs in canonical order."""
        for sym in self.signature.names:
            for t in sorted(self.relations[sym]):
                yield sym, t

    def named(self, sym: str) -> set[tuple[str, ...]]:
        return {tuple(self.universe[x] for x in t) for t in self.relations[sym]}

    def isolated(self) -> list[str]:
        """Universe elements occurring in no tuple."""
        used = set()
        for ts in self.relations.values():
            for t in ts:
                used.update(t)
        return [u for i, u in enumerate(self.universe) if i not in used]

    def reduct(self, symbols: Iterable[str]) -> "RelStructure":
        keep = set(symbols)
        sig = Signature(tuple((n, a) for n, a in self.signature if n in keep))
        return RelStructure(sig, self.universe, {n: self.relations[n] for n in sig.names})

    def __str__(self) -> str:
        return format_structure(self)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; ``edges`` holds index pairs ``(i, j)`` with ``i < j``."""

    vertices: tuple[str, ...]
    edges: frozenset[tuple[int, int]] = frozenset()
    allow_loops: bool = False

    def __post_init__(self) -> None:
        if len(set(self.vertices)) != len(self.vertices):
            raise StructureError("duplicate vertex")
        n = len(self.vertices)
        norm = set()
        for e in self.edges:
            i, j = e
            if not (0 <= i < n and 0 <= j < n):
                raise StructureError(f"edge {e} leaves the vertex set")
            if i == j and not self.allow_loops:
                raise StructureError(f"self-loop at {self.vertices[i]!r}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_named(cls, vertices: Sequence[str], edges: Iterable[tuple[str, str]]) -> "Graph":
        index = {v: i for i, v in enumerate(vertices)}
        try:
            return cls(tuple(vertices), frozenset((index[u], index[v]) for u, v in edges))
        except KeyError as exc:
            raise StructureError(f"edge endpoint {exc.args[0]!r} is not a vertex") from None

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in self.vertices]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return tuple(frozenset(s) for s in nbrs)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def named_edges(self) -> set[frozenset[str]]:
        return {frozenset((self.vertices[i], self.vertices[j])) for i, j in self.edges}

    def is_connected(self) -> bool:
        return len(_components(len(self.vertices), self.adj)) <= 1


def _components(n: int, adj: Sequence[Iterable[int]]) -> list[list[int]]:
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp, stack = [], [s]
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def gaifman_graph(A: RelStructure) -> Graph:
    """Graph on A's universe joining distinct elements that share a tuple."""
    edges = set()
    for ts in A.relations.values():
        for t in ts:
            distinct = sorted(set(t))
            for i, u in enumerate(distinct):
                for v in distinct[i + 1:]:
                    edges.add((u, v))
    return Graph(A.universe, frozenset(edges))


def connected_components(A: RelStructure) -> list[set[str]]:
    g = gaifman_graph(A)
    return [{A.universe[i] for i in comp} for comp in _components(len(g), g.adj)]


def individualise(A: RelStructure) -> RelStructure:
    """Expand A by a fresh unary colour ``P_a = {a}`` for every element a."""
    fresh = [(COLOUR_PREFIX + a, 1) for a in A.universe]
    clash = [n for n, _ in fresh if n in A.signature]
    if clash:
        raise StructureError(f"colour symbols already present: {clash[:3]}")
    rels = dict(A.relations)
    for i, a in enumerate(A.universe):
        rels[COLOUR_PREFIX + a] = frozenset({(i,)})
    return RelStructure(A.signature.extend(fresh), A.universe, rels)


def graph_structure(G: Graph, colours: Mapping[str, Iterable[str]] | None = None) -> RelStructure:
    """Symmetric binary ``E`` structure of G, optionally with unary colours.

    ``colours`` maps a colour name x to the vertices of class ``P_x``.
    """
    rels: dict[str, frozenset] = {EDGE: frozenset(t for i, j in G.edges for t in ((i, j), (j, i)))}
    symbols = [(EDGE, 2)]
    for x, members in (colours or {}).items():
        symbols.append((COLOUR_PREFIX + x, 1))
        rels[COLOUR_PREFIX + x] = frozenset((G.index[v],) for v in members)
    return RelStructure(Signature(tuple(symbols)), G.vertices, rels)


def structure_graph(A: RelStructure, symbol: str = EDGE) -> Graph:
    """Read a graph back from a binary relation, ignoring orientation."""
    if A.signature.arity.get(symbol) != 2:
        raise StructureError(f"structure has no binary symbol {symbol!r}")
    edges = set()
    for i, j in A.relations[symbol]:
        if i == j:
            raise StructureError(f"self-loop at {A.universe[i]!r}")
        edges.add((min(i, j), max(i, j)))
    return Graph(A.universe, frozenset(edges))


@dataclass(frozen=True)
class PartitionedGraph:
    """View of a structure as a graph whose colour classes partition its vertices.

    ``colours`` lists the colour names x; class ``P_x`` is the unary relation
    named ``P_<x>``.  Empty classes are allowed.
    """

    structure: RelStructure
    colours: tuple[str, ...]

    def __post_init__(self) -> None:
        S = self.structure
        if S.signature.arity.get(EDGE) != 2:
            raise StructureError("partitioned graph needs a binary E relation")
        E = S.relations[EDGE]
        for i, j in E:
            if i == j:
                raise StructureError(f"self-loop at {S.universe[i]!r}")
            if (j, i) not in E:
                raise StructureError("E relation is not symmetric")
        owner: dict[int, str] = {}
        for x in self.colours:
            sym = COLOUR_PREFIX + x
            if S.signature.arity.get(sym) != 1:
                raise StructureError(f"missing unary colour symbol {sym!r}")
            for (v,) in S.relations[sym]:
                if v in owner:
                    raise StructureError(
                        f"vertex {S.universe[v]!r} has colours {owner[v]!r} and {x!r}")
                owner[v] = x
        if len(owner) != len(S.universe):
            missing = [u for i, u in enumerate(S.universe) if i not in owner]
            raise StructureError(f"uncoloured vertices: {missing[:5]}")

    @classmethod
    def from_structure(cls, S: RelStructure) -> "PartitionedGraph":
        """Take every unary ``P_<x>`` symbol, in signature order, as a colour."""
        cols = tuple(n[len(COLOUR_PREFIX):] for n, a in S.signature
                     if a == 1 and n.startswith(COLOUR_PREFIX))
        return cls(S, cols)

    @classmethod
    def build(cls, vertices: Sequence[str], edges: Iterable[tuple[str, str]],
              classes: Mapping[str, Iterable[str]]) -> "PartitionedGraph":
        g = Graph.from_named(vertices, edges)
        return cls(graph_structure(g, classes), tuple(classes))

    @cached_property
    def graph(self) -> Graph:
        return structure_graph(self.structure)

    def cls(self, x: str) -> list[int]:
        """Vertex indices of colour class x, in universe order."""
        return sorted(v for (v,) in self.structure.relations[COLOUR_PREFIX + x])

    @cached_property
    def colour_of(self) -> dict[int, str]:
        return {v: x for x in self.colours for v in self.cls(x)}

    @property
    def norm(self) -> int:
        return self.structure.norm

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.structure.universe


# -- text format ------------------------------------------------------------

_TUPLE = re.compile(r"\(([^()]*)\)")


def parse_structure(text: str) -> RelStructure:
    """Parse the line-based structure format (``sig``/``universe``/``rel`` lines)."""
    symbols: list[tuple[str, int]] | None = None
    universe: list[str] | None = None
    rels: dict[str, list[tuple[str, ...]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "sig":
            symbols = []
            for tok in rest.split():
                name, slash, ar = tok.rpartition("/")
                if not slash or not ar.isdigit():
                    raise StructureError(f"line {lineno}: bad symbol {tok!r}")
                symbols.append((name, int(ar)))
        elif head == "universe":
            universe = rest.split()
        elif head == "rel":
            name, _, body = rest.partition(" ")
            if not name:
                raise StructureError(f"line {lineno}: rel without symbol")
            leftover = _TUPLE.sub(" ", body).strip()
            if leftover:
                raise StructureError(f"line {lineno}: unparsable tuple text {leftover!r}")
            ts = [tuple(x.strip() for x in m.split(",")) for m in _TUPLE.findall(body)]
            rels.setdefault(name, []).extend(ts)
        else:
            raise StructureError(f"line {lineno}: unknown directive {head!r}")
    if symbols is None or universe is None:
        raise StructureError("structure file needs 'sig' and 'universe' lines")
    declared = {n for n, _ in symbols}
    for name in rels:
        if name not in declared:
            raise StructureError(f"relation {name!r} not declared in sig")
    return RelStructure.from_named(symbols, universe, rels)


def format_structure(A: RelStructure) -> str:
    lines = ["sig " + " ".join(f"{n}/{a}" for n, a in A.signature) if len(A.signature) else "sig",
             "universe " + " ".join(A.universe) if A.universe else "universe"]
    for sym in A.signature.names:
        ts = sorted(A.relations[sym])
        body = " ".join("(" + ",".join(A.universe[x] for x in t) + ")" for t in ts)
        lines.append(f"rel {sym} {body}".rstrip())
    return "\n".join(lines) + "\n"


def read_structure(path) -> RelStructure:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


def write_structure(A: RelStructure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_structure(A))


# -- generators -------------------------------------------------------------

def path_graph(n: int, prefix: str = "x") -> Graph:
    vs = tuple(f"{prefix}{i}" for i in range(1, n + 1))
    return Graph(vs, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int, prefix: str = "x") -> Graph:
    if n < 3:
        raise StructureError("cycles need at least 3 vertices")
    vs = tuple(f"{prefix}{i}" for i in range(1, n + 1))
    return Graph(vs, frozenset((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)))


def complete_graph(k: int, prefix: str = "x") -> Graph:
    vs = tuple(f"{prefix}{i}" for i in range(1, k + 1))
    return Graph(vs, frozenset((i, j) for i in range(k) for j in range(i + 1, k)))


def grid_graph(rows: int, cols: int | None = None, prefix: str = "v") -> Graph:
    """rows x cols grid; vertex ``v{i}_{j}`` sits in row i, column j (1-based)."""
    cols = rows if cols is None else cols
    vs = tuple(f"{prefix}{i}_{j}" for i in range(1, rows + 1) for j in range(1, cols + 1))
    idx = {v: n for n, v in enumerate(vs)}
    edges = set()
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            if j < cols:
                edges.add((idx[f"{prefix}{i}_{j}"], idx[f"{prefix}{i}_{j + 1}"]))
            if i < rows:
                edges.add((idx[f"{prefix}{i}_{j}"], idx[f"{prefix}{i + 1}_{j}"]))
    return Graph(vs, frozenset(edges))


def complete_bipartite_graph(a: int, b: int) -> Graph:
    vs = tuple([f"l{i}" for i in range(1, a + 1)] + [f"r{j}" for j in range(1, b + 1)])
    return Graph(vs, frozenset((i, a + j) for i in range(a) for j in range(b)))
