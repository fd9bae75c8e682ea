"""Counting, enumeration, projection, restriction and membership on circuits."""
from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping

from .circuit import (
    DEFAULT_BUDGET, IN, UNION, CircuitBuilder, CircuitError, FactCircuit,
    PartialHom, check_deterministic, normalize,
)

__all__ = [
    "QueryError", "NotCertifiedError", "count", "EnumerationCursor",
    "enumerate_homs", "project", "restrict", "member",
]


class QueryError(CircuitError):
    pass


class NotCertifiedError(QueryError):
    pass


def _require_deterministic(C: FactCircuit, budget: int) -> None:
    if C.deterministic or C.flag is not None:
        return
    report = check_deterministic(C, budget)
    if report.status != "certified":
        raise NotCertifiedError(
            f"circuit is not certified deterministic ({report.status}); counting would "
            "overcount shared mappings. Run check_deterministic, or materialise instead.")


def count(C: FactCircuit, budget: int = DEFAULT_BUDGET, assume_deterministic: bool = False) -> int:
    """Number of represented mappings: inputs count 1, unions add, products multiply.

    Uncertified circuits are checked first and refused unless proven deterministic.
    """
    if C.is_empty:
        return 0
    if C.is_unit:
        return 1
    if not assume_deterministic:
        _require_deterministic(C, budget)
    n = [0] * len(C.gates)
    for gid in C.order:
        g = C.gates[gid]
        if g.kind == IN:
            n[gid] = 1
        elif g.kind == UNION:
            n[gid] = sum(n[c] for c in g.children)
        else:
            v = 1
            for c in g.children:
                v *= n[c]
            n[gid] = v
    return n[C.sink]


# -- enumeration ----------------------------------------------------------------

class _Input:
    __slots__ = ("gate",)

    def __init__(self, gate):
        self.gate = gate

    def first(self, cur) -> None:
        cur.steps += 1

    def next(self, cur) -> bool:
        cur.steps += 1
        return False

    def collect(self, cur, out) -> None:
        cur.steps += 1
        out.append((self.gate.var, self.gate.val))


class _Union:
    __slots__ = ("children", "idx", "active")

    def __init__(self, children):
        self.children = children
        self.idx = 0
        self.active = None

    def first(self, cur) -> None:
        cur.steps += 1
        self.idx = 0
        self.active = cur.state(self.children[0])
        self.active.first(cur)

    def next(self, cur) -> bool:
        cur.steps += 1
        if self.active.next(cur):
            return True
        self.idx += 1
        if self.idx == len(self.children):
            return False
        self.active = cur.state(self.children[self.idx])
        self.active.first(cur)
        return True

    def collect(self, cur, out) -> None:
        cur.steps += 1
        self.active.collect(cur, out)


class _Product:
    __slots__ = ("parts",)

    def __init__(self, children, cur):
        self.parts = [cur.state(c) for c in children]

    def first(self, cur) -> None:
        cur.steps += 1
        for p in self.parts:
            p.first(cur)

    def next(self, cur) -> bool:
        # odometer, leftmost factor turns fastest
        cur.steps += 1
        for p in self.parts:
            if p.next(cur):
                return True
            p.first(cur)
        return False

    def collect(self, cur, out) -> None:
        cur.steps += 1
        for p in self.parts:
            p.collect(cur, out)


class EnumerationCursor:
    """Iterates the mappings of a deterministic circuit without repetition.

    The circuit is normalized first.  ``steps`` counts gate steps (each
    first/next call on a gate and each gate visited while reading off an
    output); ``delays`` holds the steps spent between consecutive outputs.
    """

    def __init__(self, C: FactCircuit, budget: int = DEFAULT_BUDGET,
                 assume_deterministic: bool = False):
        if not assume_deterministic:
            _require_deterministic(C, budget)
        self.circuit = C if C.flag is not None or C.is_normal() else normalize(C)
        self.steps = 0
        self.delays: list[int] = []
        self.emitted = 0
        self._started = False
        self._done = False
        self._root = None

    def state(self, gid: int):
        g = self.circuit.gates[gid]
        if g.kind == IN:
            return _Input(g)
        if g.kind == UNION:
            return _Union(g.children)
        return _Product(g.children, self)

    def __iter__(self) -> Iterator[PartialHom]:
        return self

    def __next__(self) -> PartialHom:
        if self._done:
            raise StopIteration
        C = self.circuit
        before = self.steps
        if C.flag is not None:
            self._done = True
            if C.is_empty:
                raise StopIteration
            self.delays.append(0)
            self.emitted += 1
            return ()
        if not self._started:
            self._started = True
            self._root = self.state(C.sink)
            self._root.first(self)
        elif not self._root.next(self):
            self._done = True
            raise StopIteration
        out: list[tuple[int, int]] = []
        self._root.collect(self, out)
        out.sort()
        self.delays.append(self.steps - before)
        self.emitted += 1
        return tuple(out)

    @property
    def max_delay(self) -> int:
        return max(self.delays, default=0)


def enumerate_homs(C: FactCircuit, limit: int | None = None, **kw) -> Iterator[PartialHom]:
    cur = EnumerationCursor(C, **kw)
    for i, h in enumerate(cur):
        if limit is not None and i >= limit:
            return
        yield h


# -- transformations ---------------------------------------------------------------

def _left_indices(C: FactCircuit, names: Iterable) -> set[int]:
    idx = {x: i for i, x in enumerate(C.left)}
    out = set()
    for x in names:
        if x not in idx:
            raise QueryError(f"{x!r} is not in the left universe")
        out.add(idx[x])
    return out


def project(C: FactCircuit, keep: Iterable[str], stats: dict | None = None) -> FactCircuit:
    """Circuit for the restrictions of all represented mappings to ``keep``.

    One pass over the gates in topological order: inputs outside ``keep`` are
    dropped, and a gate dies when it loses all children.  The result keeps the
    left universe but is not certified deterministic.
    """
    X = _left_indices(C, keep)
    gate_visits = wire_visits = 0
    if C.flag is not None:
        result = C
    else:
        b = CircuitBuilder(C.left, C.right, share_inputs=False)
        new: dict[int, int] = {}
        for gid in C.order:
            gate_visits += 1
            g = C.gates[gid]
            if g.kind == IN:
                if g.var in X:
                    new[gid] = b.input(g.var, g.val)
                continue
            wire_visits += len(g.children)
            kids = [new[c] for c in g.children if c in new]
            if kids:
                new[gid] = b.union(kids) if g.kind == UNION else b.product(kids)
        if C.sink in new:
            result = b.build(new[C.sink], deterministic=False)
        else:
            result = FactCircuit.unit(C.left, C.right)
    if stats is not None:
        stats.update(gate_visits=gate_visits, wire_visits=wire_visits)
    return result


def restrict(C: FactCircuit, filters: Mapping[str, Iterable[str]],
             stats: dict | None = None) -> FactCircuit:
    """Keep only mappings sending each filtered element into its allowed set.

    A product dies with any of its children; a union dies with all of them.
    Determinism is preserved.
    """
    ridx = {x: i for i, x in enumerate(C.right)}
    allowed: dict[int, set[int]] = {}
    for a, vals in filters.items():
        (ai,) = _left_indices(C, [a])
        bs = set()
        for v in vals:
            if v not in ridx:
                raise QueryError(f"{v!r} is not in the right universe")
            bs.add(ridx[v])
        allowed[ai] = bs
    return _restrict_indices(C, allowed, stats)


def _restrict_indices(C: FactCircuit, allowed: Mapping[int, set[int]],
                      stats: dict | None = None) -> FactCircuit:
    gate_visits = wire_visits = 0
    if C.flag is not None:
        result = C
    else:
        b = CircuitBuilder(C.left, C.right, share_inputs=False)
        new: dict[int, int] = {}
        for gid in C.order:
            gate_visits += 1
            g = C.gates[gid]
            if g.kind == IN:
                if g.var not in allowed or g.val in allowed[g.var]:
                    new[gid] = b.input(g.var, g.val)
                continue
            wire_visits += len(g.children)
            if g.kind == UNION:
                kids = [new[c] for c in g.children if c in new]
                if kids:
                    new[gid] = b.union(kids)
            elif all(c in new for c in g.children):
                new[gid] = b.product([new[c] for c in g.children])
        if C.sink in new:
            result = b.build(new[C.sink], deterministic=C.deterministic)
        else:
            result = FactCircuit.empty(C.left, C.right)
    if stats is not None:
        stats.update(gate_visits=gate_visits, wire_visits=wire_visits)
    return result


def member(C: FactCircuit, h: Mapping[str, str] | PartialHom) -> bool:
    """Whether ``h`` is represented; ``h`` must be defined exactly on the sink's domain."""
    if isinstance(h, Mapping):
        ridx = {x: i for i, x in enumerate(C.right)}
        pairs = []
        for a, v in h.items():
            (ai,) = _left_indices(C, [a])
            if v not in ridx:
                return False
            pairs.append((ai, ridx[v]))
    else:
        pairs = list(h)
        if any(not 0 <= a < len(C.left) for a, _ in pairs):
            raise QueryError("mapping uses elements outside the left universe")
    if C.is_empty:
        return False
    dom = {a for a, _ in pairs}
    if len(dom) != len(pairs) or dom != set(C.sink_domain()):
        raise QueryError("membership needs a mapping defined exactly on the circuit's domain")
    if C.is_unit:
        return True
    return not _restrict_indices(C, {a: {v} for a, v in pairs}).is_empty
