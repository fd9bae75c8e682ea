"""Tree decompositions: elimination heuristics, exact search, validation, plans."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

from .relstruct import Graph, RelStructure, gaifman_graph

__all__ = [
    "DecompositionError",
    "TreeDecomposition",
    "CompilePlan",
    "Violation",
    "EXACT_LIMIT",
    "decompose",
    "decompose_structure",
    "from_elimination_order",
    "validate",
    "make_plan",
    "parse_td",
    "format_td",
]

EXACT_LIMIT = 20


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted tree of bags over vertex indices.

    ``parent[t]`` is None exactly for the root.  Node ids are ``0..len(bags)-1``.
    """

    bags: tuple[frozenset[int], ...]
    parent: tuple[int | None, ...]

    def __post_init__(self) -> None:
        if len(self.bags) != len(self.parent):
            raise DecompositionError("bags and parent links disagree in length")

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    @property
    def root(self) -> int | None:
        roots = [t for t, p in enumerate(self.parent) if p is None]
        return roots[0] if len(roots) == 1 else None

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in self.bags]
        for t, p in enumerate(self.parent):
            if p is not None:
                ch[p].append(t)
        return tuple(tuple(c) for c in ch)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, t) for t, p in enumerate(self.parent) if p is not None]

    def preorder(self) -> list[int]:
        """Nodes top-down from the root; parents always precede children."""
        if not self.bags:
            return []
        root = self.root
        if root is None:
            raise DecompositionError("decomposition is not a single rooted tree")
        order, stack = [], [root]
        while stack:
            t = stack.pop()
            order.append(t)
            stack.extend(reversed(self.children[t]))
        if len(order) != len(self.bags):
            raise DecompositionError("parent links do not form a tree")
        return order

    @cached_property
    def depth(self) -> tuple[int, ...]:
        d = [0] * len(self.bags)
        for t in self.preorder():
            p = self.parent[t]
            if p is not None:
                d[t] = d[p] + 1
        return tuple(d)

    def separator(self, t: int) -> frozenset[int]:
        p = self.parent[t]
        return frozenset() if p is None else self.bags[t] & self.bags[p]

    def reroot(self, root: int) -> "TreeDecomposition":
        nbrs: list[list[int]] = [[] for _ in self.bags]
        for p, t in self.edges():
            nbrs[p].append(t)
            nbrs[t].append(p)
        parent: list[int | None] = [None] * len(self.bags)
        seen = {root}
        stack = [root]
        while stack:
            t = stack.pop()
            for s in sorted(nbrs[t]):
                if s not in seen:
                    seen.add(s)
                    parent[s] = t
                    stack.append(s)
        return TreeDecomposition(self.bags, tuple(parent))

    def canonical_root(self) -> "TreeDecomposition":
        """Re-root at the first node containing the least element present."""
        present = [min(b) for b in self.bags if b]
        if not present:
            return self.reroot(0) if self.bags else self
        least = min(present)
        return self.reroot(next(t for t, b in enumerate(self.bags) if least in b))


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


# -- elimination orders -----------------------------------------------------

def from_elimination_order(G: Graph, order: Sequence[int]) -> TreeDecomposition:
    """Decomposition induced by eliminating vertices in ``order``.

    Disconnected graphs give a forest; its trees are chained under the first
    root, which is valid because the pieces share no vertices.
    """
    n = len(G)
    if sorted(order) != list(range(n)):
        raise DecompositionError("elimination order must be a permutation of the vertices")
    pos = {v: i for i, v in enumerate(order)}
    adj = [set(a) for a in G.adj]
    bags: list[frozenset[int]] = []
    later: list[set[int]] = []
    for v in order:
        nb = {w for w in adj[v] if pos[w] > pos[v]}
        later.append(nb)
        bags.append(frozenset(nb | {v}))
        for a in nb:
            adj[a] |= nb - {a}
    parent: list[int | None] = []
    for i, v in enumerate(order):
        nb = later[i]
        parent.append(min(pos[w] for w in nb) if nb else None)
    roots = [i for i, p in enumerate(parent) if p is None]
    for r in roots[1:]:
        parent[r] = roots[0]
    td = TreeDecomposition(tuple(bags), tuple(parent))
    return _contract_redundant(td).canonical_root() if bags else td


def _contract_redundant(td: TreeDecomposition) -> TreeDecomposition:
    """Merge every bag contained in an adjacent bag into that neighbour."""
    bags = list(td.bags)
    parent = list(td.parent)
    alive = [True] * len(bags)
    changed = True
    while changed:
        changed = False
        for t in range(len(bags)):
            if not alive[t]:
                continue
            p = parent[t]
            if p is None:
                continue
            if bags[p] < bags[t]:
                bags[p] = bags[t]
            elif not bags[t] <= bags[p]:
                continue
            for s in range(len(bags)):
                if alive[s] and parent[s] == t:
                    parent[s] = p
            alive[t] = False
            changed = True
    keep = [t for t in range(len(bags)) if alive[t]]
    new_id = {t: i for i, t in enumerate(keep)}
    return TreeDecomposition(
        tuple(bags[t] for t in keep),
        tuple(None if parent[t] is None else new_id[parent[t]] for t in keep))


def _greedy_order(G: Graph, score) -> list[int]:
    adj = [set(a) for a in G.adj]
    remaining = set(range(len(G)))
    order = []
    while remaining:
        v = min(remaining, key=lambda u: (score(adj, u), u))
        nb = adj[v]
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        remaining.discard(v)
        adj[v] = set()
        order.append(v)
    return order


def _fill_in(adj, v) -> int:
    nb = sorted(adj[v])
    missing = 0
    for i, a in enumerate(nb):
        for b in nb[i + 1:]:
            if b not in adj[a]:
                missing += 1
    return missing


def _degree(adj, v) -> int:
    return len(adj[v])


def _exact_order(G: Graph) -> list[int]:
    """Elimination order of minimum width, by memoised search over vertex subsets."""
    n = len(G)
    nbr = [0] * n
    for i, j in G.edges:
        nbr[i] |= 1 << j
        nbr[j] |= 1 << i
    full = (1 << n) - 1

    def q_size(s: int, v: int) -> int:
        # vertices outside s | {v} reachable from v through s
        seen = 1 << v
        frontier = 1 << v
        out = 0
        while frontier:
            b = frontier & -frontier
            frontier ^= b
            u = b.bit_length() - 1
            new = nbr[u] & ~seen
            seen |= new
            out |= new & ~s
            frontier |= new & s
        return (out & ~(1 << v)).bit_count()

    upper = _width_of(G, _greedy_order(G, _fill_in))
    memo: dict[int, tuple[int, int]] = {}

    def best(s: int) -> tuple[int, int]:
        # min over orders eliminating s first; returns (width, last vertex)
        if s == 0:
            return (-1, -1)
        if s in memo:
            return memo[s]
        result = (n, -1)
        rest = s
        while rest:
            b = rest & -rest
            rest ^= b
            v = b.bit_length() - 1
            q = q_size(s ^ b, v)
            if q >= result[0] or q > upper:
                continue
            sub = best(s ^ b)[0]
            w = max(sub, q)
            if w < result[0]:
                result = (w, v)
        memo[s] = result
        return result

    best(full)
    order = []
    s = full
    while s:
        v = best(s)[1]
        order.append(v)
        s ^= 1 << v
    order.reverse()
    return order


def _width_of(G: Graph, order: Sequence[int]) -> int:
    return from_elimination_order(G, order).width if len(G) else -1


def decompose(G: Graph, method: str = "minfill") -> TreeDecomposition:
    """Tree decomposition of G by ``minfill``, ``mindegree`` or ``exact`` search."""
    if len(G) == 0:
        return TreeDecomposition((), ())
    if method == "minfill":
        order = _greedy_order(G, _fill_in)
    elif method == "mindegree":
        order = _greedy_order(G, _degree)
    elif method == "exact":
        if len(G) > EXACT_LIMIT:
            raise DecompositionError(
                f"exact decomposition refused for {len(G)} vertices (limit {EXACT_LIMIT})")
        order = _exact_order(G)
    else:
        raise DecompositionError(f"unknown decomposition method {method!r}")
    return from_elimination_order(G, order)


def decompose_structure(A: RelStructure, method: str = "minfill") -> TreeDecomposition:
    return decompose(gaifman_graph(A), method)


# -- validation -------------------------------------------------------------

def validate(td: TreeDecomposition, G: Graph) -> list[Violation]:
    """Every violated tree-decomposition condition, one entry each."""
    out: list[Violation] = []
    n = len(G)
    k = len(td.bags)
    if not k:
        if n:
            out.append(Violation("tree", "no bags"))
        return out
    roots = [t for t, p in enumerate(td.parent) if p is None]
    tree_ok = len(roots) == 1
    if not tree_ok:
        out.append(Violation("tree", f"expected one root, found {len(roots)}"))
    else:
        try:
            td.preorder()
        except DecompositionError as exc:
            tree_ok = False
            out.append(Violation("tree", str(exc)))
    for t, b in enumerate(td.bags):
        stray = sorted(v for v in b if not 0 <= v < n)
        if stray:
            out.append(Violation("bag", f"bag {t} holds non-vertices {stray}"))
    if tree_ok:
        for v in range(n):
            nodes = {t for t, b in enumerate(td.bags) if v in b}
            if not nodes:
                out.append(Violation("coverage", f"vertex {G.vertices[v]!r} is in no bag"))
                continue
            tops = [t for t in nodes if td.parent[t] not in nodes]
            if len(tops) > 1:
                out.append(Violation(
                    "connectivity",
                    f"bags of vertex {G.vertices[v]!r} form {len(tops)} tree components"))
    for i, j in sorted(G.edges):
        if not any(i in b and j in b for b in td.bags):
            out.append(Violation("edge", f"edge {{{G.vertices[i]}, {G.vertices[j]}}} is in no bag"))
    return out


# -- compile plans ----------------------------------------------------------

@dataclass(frozen=True)
class CompilePlan:
    """Where each element is output and where each constraint is checked."""

    structure: RelStructure
    decomposition: TreeDecomposition
    anchor: tuple[int, ...]
    site: dict[tuple[str, tuple[int, ...]], int] = field(default_factory=dict)

    def anchored(self, t: int) -> list[int]:
        return [v for v, a in enumerate(self.anchor) if a == t]

    def constraints_at(self, t: int) -> list[tuple[str, tuple[int, ...]]]:
        return [c for c, s in self.site.items() if s == t]


def make_plan(A: RelStructure, td: TreeDecomposition) -> CompilePlan:
    problems = validate(td, gaifman_graph(A))
    if problems:
        raise DecompositionError("invalid decomposition: " + "; ".join(map(str, problems)))
    depth = td.depth
    anchor = []
    for v in range(len(A)):
        nodes = [t for t, b in enumerate(td.bags) if v in b]
        anchor.append(min(nodes, key=lambda t: (depth[t], t)))
    site = {}
    for sym, tup in A.tuples():
        elems = set(tup)
        nodes = [t for t, b in enumerate(td.bags) if elems <= b]
        site[(sym, tup)] = min(nodes, key=lambda t: (-depth[t], t))
    return CompilePlan(A, td, tuple(anchor), site)


# -- .td text format --------------------------------------------------------

def format_td(td: TreeDecomposition, G: Graph | RelStructure) -> str:
    names = G.vertices if isinstance(G, Graph) else G.universe
    lines = ["c universe " + " ".join(names),
             f"s td {len(td.bags)} {td.width + 1} {len(names)}"]
    for t, b in enumerate(td.bags):
        lines.append(" ".join(["b", str(t + 1)] + [str(v + 1) for v in sorted(b)]))
    root = td.root
    if root is not None:
        lines.append(f"c root {root + 1}")
    for p, t in td.edges():
        lines.append(f"{p + 1} {t + 1}")
    return "\n".join(lines) + "\n"


def parse_td(text: str) -> TreeDecomposition:
    """Parse PACE-style ``.td`` text; rooted at a ``c root`` hint or canonically."""
    header = None
    bags: dict[int, frozenset[int]] = {}
    edges = []
    root_hint = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok:
            continue
        try:
            if tok[0] == "c":
                if len(tok) == 3 and tok[1] == "root":
                    root_hint = int(tok[2]) - 1
                continue
            if tok[0] == "s":
                if tok[1] != "td" or len(tok) != 5:
                    raise DecompositionError(f"line {lineno}: bad header")
                header = tuple(int(x) for x in tok[2:])
            elif tok[0] == "b":
                bags[int(tok[1]) - 1] = frozenset(int(x) - 1 for x in tok[2:])
            else:
                a, b = (int(x) - 1 for x in tok)
                edges.append((a, b))
        except ValueError as exc:
            if isinstance(exc, DecompositionError):
                raise
            raise DecompositionError(f"line {lineno}: cannot parse {raw!r}") from None
    if header is None:
        raise DecompositionError("missing 's td' header")
    nb = header[0]
    if sorted(bags) != list(range(nb)):
        raise DecompositionError("bag ids must be 1..numBags")
    if len(edges) != max(nb - 1, 0):
        raise DecompositionError(f"a tree on {nb} bags needs {nb - 1} edges, got {len(edges)}")
    nbrs: list[list[int]] = [[] for _ in range(nb)]
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    # orient away from node 0, then re-root
    parent: list[int | None] = [None] * nb
    if nb:
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for s in nbrs[t]:
                if s not in seen:
                    seen.add(s)
                    parent[s] = t
                    stack.append(s)
        if len(seen) != nb:
            raise DecompositionError("decomposition edges do not connect all bags")
    td = TreeDecomposition(tuple(bags[t] for t in range(nb)), tuple(parent))
    if root_hint is not None:
        return td.reroot(root_hint)
    return td.canonical_root() if nb else td
