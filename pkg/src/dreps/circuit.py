"""Factorisation circuits: union/product DAGs over single-variable input gates.

A circuit over left universe A and right universe B has input gates labelled
``a -> b``, union gates and product gates.  Gate ids are dense integers and
every gate list produced here is topologically ordered (children first).

A partial homomorphism is a tuple of ``(a, b)`` index pairs sorted by ``a``.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

__all__ = [
    "IN", "UNION", "PROD", "EMPTY", "UNIT",
    "Gate", "PartialHom", "FactCircuit", "CircuitBuilder",
    "CircuitError", "CycleError", "BudgetExceeded",
    "CircuitViolation", "DeterminismReport",
    "check_well_defined", "check_deterministic", "structurally_deterministic",
    "materialise", "transversal", "normalize", "flat_representation",
    "relabel", "rebuild", "parse_circuit", "format_circuit",
    "read_circuit", "write_circuit", "named",
]

IN, UNION, PROD = "IN", "UNION", "PROD"
EMPTY, UNIT = "EMPTY", "UNIT"

PartialHom = tuple[tuple[int, int], ...]

DEFAULT_BUDGET = 2_000_000


class CircuitError(ValueError):
    pass


class CycleError(CircuitError):
    pass


class BudgetExceeded(CircuitError):
    pass


class Gate(NamedTuple):
    kind: str
    children: tuple[int, ...] = ()
    var: int = -1
    val: int = -1


@dataclass(frozen=True)
class FactCircuit:
    """An immutable factorisation circuit.

    ``flag`` marks the two designated circuits the gate grammar cannot
    express: EMPTY (represents no mapping) and UNIT (only the empty mapping).
    ``deterministic`` records a determinism certificate attached by whoever
    built the circuit (compile, restrict, flat_representation, ...).
    """

    left: tuple[str, ...]
    right: tuple[str, ...]
    gates: tuple[Gate, ...] = ()
    sink: int | None = None
    flag: str | None = None
    deterministic: bool = False

    def __post_init__(self) -> None:
        if self.flag is not None:
            if self.flag not in (EMPTY, UNIT):
                raise CircuitError(f"unknown circuit flag {self.flag!r}")
            if self.gates or self.sink is not None:
                raise CircuitError(f"{self.flag} circuit cannot carry gates")
            return
        n = len(self.gates)
        if self.sink is None or not 0 <= self.sink < n:
            raise CircuitError("circuit needs a sink gate")
        for gid, g in enumerate(self.gates):
            if g.kind == IN:
                if g.children:
                    raise CircuitError(f"input gate g{gid} has children")
                if not (0 <= g.var < len(self.left) and 0 <= g.val < len(self.right)):
                    raise CircuitError(f"input gate g{gid} label out of range")
            elif g.kind in (UNION, PROD):
                for c in g.children:
                    if not 0 <= c < n:
                        raise CircuitError(f"gate g{gid} wired to missing gate {c}")
            else:
                raise CircuitError(f"gate g{gid} has unknown kind {g.kind!r}")

    @classmethod
    def empty(cls, left: Sequence[str], right: Sequence[str]) -> "FactCircuit":
        return cls(tuple(left), tuple(right), flag=EMPTY, deterministic=True)

    @classmethod
    def unit(cls, left: Sequence[str], right: Sequence[str]) -> "FactCircuit":
        return cls(tuple(left), tuple(right), flag=UNIT, deterministic=True)

    @property
    def is_empty(self) -> bool:
        return self.flag == EMPTY

    @property
    def is_unit(self) -> bool:
        return self.flag == UNIT

    @property
    def num_gates(self) -> int:
        return len(self.gates)

    @property
    def num_wires(self) -> int:
        return sum(len(g.children) for g in self.gates)

    @property
    def size(self) -> int:
        """Number of gates plus number of wires."""
        return self.num_gates + self.num_wires

    @cached_property
    def order(self) -> tuple[int, ...]:
        """Topological order of all gates, children before parents."""
        n = len(self.gates)
        state = [0] * n
        out: list[int] = []
        for root in range(n):
            if state[root]:
                continue
            stack = [(root, 0)]
            state[root] = 1
            while stack:
                g, i = stack[-1]
                ch = self.gates[g].children
                if i < len(ch):
                    stack[-1] = (g, i + 1)
                    c = ch[i]
                    if state[c] == 1:
                        raise CycleError(f"cycle through gate g{c}")
                    if state[c] == 0:
                        state[c] = 1
                        stack.append((c, 0))
                else:
                    state[g] = 2
                    out.append(g)
                    stack.pop()
        return tuple(out)

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        ps: list[list[int]] = [[] for _ in self.gates]
        for gid, g in enumerate(self.gates):
            for c in g.children:
                ps[c].append(gid)
        return tuple(tuple(p) for p in ps)

    @cached_property
    def domains(self) -> tuple[frozenset[int], ...]:
        dom: list[frozenset[int]] = [frozenset()] * len(self.gates)
        for gid in self.order:
            g = self.gates[gid]
            if g.kind == IN:
                dom[gid] = frozenset((g.var,))
            else:
                dom[gid] = frozenset().union(*(dom[c] for c in g.children))
        return tuple(dom)

    def sink_domain(self) -> frozenset[int]:
        if self.flag is not None:
            return frozenset()
        return self.domains[self.sink]

    def reachable(self) -> set[int]:
        if self.flag is not None:
            return set()
        seen = {self.sink}
        stack = [self.sink]
        while stack:
            for c in self.gates[stack.pop()].children:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def is_treelike(self) -> bool:
        if self.flag is not None:
            return True
        return all(len(p) == (0 if gid == self.sink else 1) for gid, p in enumerate(self.parents))

    def is_normal(self) -> bool:
        for g in self.gates:
            if g.kind == IN:
                continue
            if len(g.children) < 2:
                return False
            if g.kind == UNION and any(self.gates[c].kind == UNION for c in g.children):
                return False
        return True

    def with_certificate(self, deterministic: bool = True) -> "FactCircuit":
        return FactCircuit(self.left, self.right, self.gates, self.sink, self.flag, deterministic)

    def __str__(self) -> str:
        return format_circuit(self)


class CircuitBuilder:
    """Incremental construction of a circuit, children before parents.

    With ``share_inputs`` every ``a -> b`` label gets a single input gate.
    """

    def __init__(self, left: Sequence[str], right: Sequence[str], share_inputs: bool = True):
        self.left = tuple(left)
        self.right = tuple(right)
        self.gates: list[Gate] = []
        self._inputs: dict[tuple[int, int], int] | None = {} if share_inputs else None

    def input(self, a: int, b: int) -> int:
        if self._inputs is not None:
            gid = self._inputs.get((a, b))
            if gid is not None:
                return gid
        self.gates.append(Gate(IN, (), a, b))
        gid = len(self.gates) - 1
        if self._inputs is not None:
            self._inputs[(a, b)] = gid
        return gid

    def union(self, children: Iterable[int]) -> int:
        self.gates.append(Gate(UNION, tuple(children)))
        return len(self.gates) - 1

    def product(self, children: Iterable[int]) -> int:
        self.gates.append(Gate(PROD, tuple(children)))
        return len(self.gates) - 1

    def build(self, sink: int, deterministic: bool = False) -> FactCircuit:
        return rebuild(FactCircuit(self.left, self.right, tuple(self.gates), sink), deterministic)


def rebuild(C: FactCircuit, deterministic: bool | None = None) -> FactCircuit:
    """Drop gates unreachable from the sink and renumber in topological order."""
    det = C.deterministic if deterministic is None else deterministic
    if C.flag is not None:
        return FactCircuit(C.left, C.right, flag=C.flag, deterministic=True)
    keep = C.reachable()
    order = [g for g in C.order if g in keep]
    new_id = {g: i for i, g in enumerate(order)}
    gates = tuple(
        g if g.kind == IN else Gate(g.kind, tuple(new_id[c] for c in g.children))
        for g in (C.gates[o] for o in order))
    return FactCircuit(C.left, C.right, gates, new_id[C.sink], None, det)


def named(C: FactCircuit, h: PartialHom) -> dict[str, str]:
    return {C.left[a]: C.right[b] for a, b in h}


# -- semantic checks ----------------------------------------------------------

@dataclass(frozen=True)
class CircuitViolation:
    gate: int
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"g{self.gate} {self.kind}: {self.detail}"


def check_well_defined(C: FactCircuit) -> list[CircuitViolation]:
    """Union children must share a domain; product children must be disjoint.

    Raises CycleError on cyclic wiring.
    """
    if C.flag is not None:
        return []
    C.order  # raises on cycles
    dom = C.domains
    out: list[CircuitViolation] = []
    names = C.left
    reach = C.reachable()
    for gid, g in enumerate(C.gates):
        if gid not in reach:
            out.append(CircuitViolation(gid, "dangling", "gate does not reach the sink"))
        if g.kind == IN:
            continue
        if not g.children:
            out.append(CircuitViolation(gid, "childless", f"{g.kind} gate has no children"))
            continue
        if g.kind == UNION:
            first = dom[g.children[0]]
            for c in g.children[1:]:
                if dom[c] != first:
                    diff = sorted(names[x] for x in first ^ dom[c])
                    out.append(CircuitViolation(
                        gid, "domain-mismatch",
                        f"children g{g.children[0]} and g{c} differ on {', '.join(diff)}"))
        else:
            for c1, c2 in combinations(g.children, 2):
                common = dom[c1] & dom[c2]
                if common:
                    shared = sorted(names[x] for x in common)
                    out.append(CircuitViolation(
                        gid, "overlap",
                        f"children g{c1} and g{c2} both define {', '.join(shared)}"))
    return out


def _merge(h1: PartialHom, h2: PartialHom) -> PartialHom:
    return tuple(sorted(h1 + h2))


def _gate_sets(C: FactCircuit, budget: int, on_union=None) -> dict[int, set[PartialHom]]:
    reach = C.reachable()
    sets: dict[int, set[PartialHom]] = {}
    total = 0
    for gid in C.order:
        if gid not in reach:
            continue
        g = C.gates[gid]
        if g.kind == IN:
            s = {((g.var, g.val),)}
        elif g.kind == UNION:
            if on_union is not None:
                on_union(gid, [sets[c] for c in g.children])
            s = set().union(*(sets[c] for c in g.children))
        else:
            est = 1
            for c in g.children:
                est *= len(sets[c])
            if total + est > budget:
                raise BudgetExceeded(f"materialisation exceeds budget {budget}")
            s = {()}
            for c in g.children:
                s = {_merge(h, k) for h in s for k in sets[c]}
        total += len(s)
        if total > budget:
            raise BudgetExceeded(f"materialisation exceeds budget {budget}")
        sets[gid] = s
    return sets


def materialise(C: FactCircuit, budget: int = DEFAULT_BUDGET) -> set[PartialHom]:
    """The set of mappings represented at the sink, computed bottom-up."""
    if C.is_empty:
        return set()
    if C.is_unit:
        return {()}
    return _gate_sets(C, budget)[C.sink]


@dataclass(frozen=True)
class DeterminismReport:
    status: str  # certified | refuted | unknown
    method: str  # certificate | structural | semantic | budget
    gate: int | None = None
    witness: PartialHom | None = None


class _Found(Exception):
    def __init__(self, gate: int, witness: PartialHom):
        self.gate = gate
        self.witness = witness


def check_deterministic(C: FactCircuit, budget: int = DEFAULT_BUDGET) -> DeterminismReport:
    if C.flag is not None or C.deterministic:
        return DeterminismReport("certified", "certificate")
    if structurally_deterministic(C):
        return DeterminismReport("certified", "structural")

    def on_union(gid, child_sets):
        seen: set[PartialHom] = set()
        for s in child_sets:
            clash = seen & s
            if clash:
                raise _Found(gid, min(clash))
            seen |= s

    try:
        _gate_sets(C, budget, on_union)
    except _Found as hit:
        return DeterminismReport("refuted", "semantic", hit.gate, hit.witness)
    except BudgetExceeded:
        return DeterminismReport("unknown", "budget")
    return DeterminismReport("certified", "semantic")


def structurally_deterministic(C: FactCircuit, pair_limit: int = 64) -> bool:
    """Sound syntactic proof that every reachable union has disjoint children.

    Per union it tries, in order: distinct values on the variables fixed by
    inputs directly under every child; one variable whose possible values are
    disjoint across children; and (for few children) a separating variable
    for every pair.
    """
    if C.flag is not None:
        return True
    gates = C.gates
    values: dict[int, dict[int, frozenset[int]]] = {}

    def vals(gid: int) -> dict[int, frozenset[int]]:
        got = values.get(gid)
        if got is not None:
            return got
        for sub in C.order:
            if sub in values:
                continue
            g = gates[sub]
            if g.kind == IN:
                values[sub] = {g.var: frozenset((g.val,))}
            else:
                acc: dict[int, set[int]] = {}
                for c in g.children:
                    for v, bs in values[c].items():
                        acc.setdefault(v, set()).update(bs)
                values[sub] = {v: frozenset(bs) for v, bs in acc.items()}
            if sub == gid:
                break
        return values[gid]

    def fixed(gid: int) -> dict[int, int]:
        g = gates[gid]
        if g.kind == IN:
            return {g.var: g.val}
        if g.kind == PROD:
            return {gates[c].var: gates[c].val for c in g.children if gates[c].kind == IN}
        return {}

    for gid in C.reachable():
        g = gates[gid]
        if g.kind != UNION or len(g.children) < 2:
            continue
        ch = g.children
        if len(set(ch)) != len(ch):
            return False
        fx = [fixed(c) for c in ch]
        common = set(fx[0]).intersection(*fx[1:])
        if common:
            key_vars = sorted(common)
            keys = {tuple(f[v] for v in key_vars) for f in fx}
            if len(keys) == len(ch):
                continue
        vs = [vals(c) for c in ch]
        ok = False
        for v in C.domains[gid]:
            seen: set[int] = set()
            total = 0
            for d in vs:
                bs = d.get(v, frozenset())
                total += len(bs)
                seen |= bs
            if total == len(seen):
                ok = True
                break
        if ok:
            continue
        if len(ch) > pair_limit:
            return False
        for d1, d2 in combinations(vs, 2):
            if not any(not (d1[v] & d2.get(v, frozenset())) for v in d1):
                return False
    return True


# -- transformations ----------------------------------------------------------

def transversal(C: FactCircuit, budget: int = DEFAULT_BUDGET) -> FactCircuit:
    """Treelike expansion: each gate is copied once per parent copy, top-down."""
    if C.flag is not None:
        return C
    paths = [0] * len(C.gates)
    paths[C.sink] = 1
    for gid in reversed(C.order):
        for c in C.gates[gid].children:
            paths[c] += paths[gid]
    total = sum(paths)
    if total > budget:
        raise BudgetExceeded(f"transversal would have {total} gates (budget {budget})")
    b = CircuitBuilder(C.left, C.right, share_inputs=False)
    gates = C.gates

    # iterative post-order copy of the unfolded tree
    result: dict[int, int] = {}
    stack: list[tuple[int, int, list[int]]] = [(C.sink, 0, [])]
    sink_copy = -1
    while stack:
        gid, i, done = stack[-1]
        g = gates[gid]
        if i < len(g.children):
            stack[-1] = (gid, i + 1, done)
            stack.append((g.children[i], 0, []))
            continue
        stack.pop()
        if g.kind == IN:
            new = b.input(g.var, g.val)
        elif g.kind == UNION:
            new = b.union(done)
        else:
            new = b.product(done)
        if stack:
            stack[-1][2].append(new)
        else:
            sink_copy = new
        result[gid] = new
    return b.build(sink_copy, C.deterministic)


def normalize(C: FactCircuit) -> FactCircuit:
    """Contract single-child gates and splice unions into parent unions."""
    if C.flag is not None:
        return C
    gates = C.gates
    b = CircuitBuilder(C.left, C.right, share_inputs=False)
    rep: dict[int, int] = {}
    for gid in C.order:
        g = gates[gid]
        if g.kind == IN:
            rep[gid] = b.input(g.var, g.val)
            continue
        kids = [rep[c] for c in g.children]
        if g.kind == UNION:
            flat: list[int] = []
            for k in kids:
                kg = b.gates[k]
                flat.extend(kg.children if kg.kind == UNION else (k,))
            kids = flat
        if len(kids) == 1:
            rep[gid] = kids[0]
        elif g.kind == UNION:
            rep[gid] = b.union(kids)
        else:
            rep[gid] = b.product(kids)
    return b.build(rep[C.sink], C.deterministic)


def flat_representation(homs: Iterable[PartialHom], left: Sequence[str],
                        right: Sequence[str]) -> FactCircuit:
    """Depth-2 treelike circuit listing every (total) mapping as one product."""
    rows = list(dict.fromkeys(tuple(sorted(h)) for h in homs))
    n = len(left)
    for h in rows:
        if len(h) != n or [a for a, _ in h] != list(range(n)):
            raise CircuitError("flat representation needs mappings total on the left universe")
    if not rows:
        return FactCircuit.empty(left, right)
    if n == 0:
        return FactCircuit.unit(left, right)
    b = CircuitBuilder(left, right, share_inputs=False)
    prods = [b.product([b.input(a, v) for a, v in h]) for h in rows]
    return b.build(b.union(prods), deterministic=True)


def relabel(C: FactCircuit, left: Sequence[str], right: Sequence[str],
            var_map: Mapping[int, int], val_map: Mapping[int, int],
            deterministic: bool | None = None) -> FactCircuit:
    """Rename input labels through ``var_map``/``val_map`` into new universes."""
    det = C.deterministic if deterministic is None else deterministic
    if C.flag is not None:
        return FactCircuit(tuple(left), tuple(right), flag=C.flag, deterministic=True)
    try:
        gates = tuple(
            Gate(IN, (), var_map[g.var], val_map[g.val]) if g.kind == IN else g
            for g in C.gates)
    except KeyError as exc:
        raise CircuitError(f"no relabelling for input element {exc.args[0]}") from None
    return FactCircuit(tuple(left), tuple(right), gates, C.sink, None, det)


# -- text format ----------------------------------------------------------------

def format_circuit(C: FactCircuit) -> str:
    head = f"dcirc left={len(C.left)} right={len(C.right)}"
    if C.flag is not None:
        head = f"dcirc {C.flag} left={len(C.left)} right={len(C.right)}"
    lines = [head, " ".join(("left",) + C.left), " ".join(("right",) + C.right)]
    if C.flag is not None:
        return "\n".join(lines) + "\n"
    if C.deterministic:
        lines.append("cert deterministic")
    for gid in C.order:
        g = C.gates[gid]
        if g.kind == IN:
            lines.append(f"g{gid} IN {C.left[g.var]} {C.right[g.val]}")
        else:
            lines.append(f"g{gid} {g.kind} " + " ".join(f"g{c}" for c in g.children))
    lines.append(f"sink g{C.sink}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> FactCircuit:
    """Parse ``.dcirc`` text.  Without ``left``/``right`` lines the universes
    are read off the input gates in order of appearance."""
    lines = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0][0] != "dcirc":
        raise CircuitError("missing 'dcirc' header")
    head = lines[0][1:]
    flag = None
    counts: dict[str, int] = {}
    for tok in head:
        if tok in (EMPTY, UNIT):
            flag = tok
        elif "=" in tok:
            k, _, v = tok.partition("=")
            if k not in ("left", "right") or not v.isdigit():
                raise CircuitError(f"bad header field {tok!r}")
            counts[k] = int(v)
        else:
            raise CircuitError(f"bad header field {tok!r}")
    left: list[str] | None = None
    right: list[str] | None = None
    cert = False
    raw_gates: list[tuple[str, str, list[str]]] = []
    sink_name = None
    for ln in lines[1:]:
        key = ln[0]
        if key == "left":
            left = ln[1:]
        elif key == "right":
            right = ln[1:]
        elif key == "cert":
            cert = ln[1:] == ["deterministic"]
        elif key == "sink":
            if len(ln) != 2:
                raise CircuitError("bad sink line")
            sink_name = ln[1]
        else:
            if len(ln) < 2 or ln[1] not in (IN, UNION, PROD):
                raise CircuitError(f"bad gate line {' '.join(ln)!r}")
            raw_gates.append((ln[0], ln[1], ln[2:]))
    if left is None or right is None:
        lseen: dict[str, None] = dict.fromkeys(left or [])
        rseen: dict[str, None] = dict.fromkeys(right or [])
        for _, kind, args in raw_gates:
            if kind == IN and len(args) == 2:
                lseen.setdefault(args[0])
                rseen.setdefault(args[1])
        left, right = list(lseen), list(rseen)
    for key, uni in (("left", left), ("right", right)):
        if key in counts and counts[key] != len(uni):
            raise CircuitError(f"header says {key}={counts[key]} but universe has {len(uni)}")
    if flag is not None:
        if raw_gates:
            raise CircuitError(f"{flag} circuit cannot list gates")
        return FactCircuit(tuple(left), tuple(right), flag=flag, deterministic=True)
    ids = {}
    for name, _, _ in raw_gates:
        if name in ids:
            raise CircuitError(f"gate {name} defined twice")
        ids[name] = len(ids)
    lidx = {x: i for i, x in enumerate(left)}
    ridx = {x: i for i, x in enumerate(right)}
    gates = []
    for name, kind, args in raw_gates:
        if kind == IN:
            if len(args) != 2 or args[0] not in lidx or args[1] not in ridx:
                raise CircuitError(f"bad input gate {name}")
            gates.append(Gate(IN, (), lidx[args[0]], ridx[args[1]]))
        else:
            try:
                gates.append(Gate(kind, tuple(ids[a] for a in args)))
            except KeyError as exc:
                raise CircuitError(f"gate {name} wired to unknown gate {exc.args[0]}") from None
    if sink_name is None or sink_name not in ids:
        raise CircuitError("missing or unknown sink")
    return FactCircuit(tuple(left), tuple(right), tuple(gates), ids[sink_name], None, cert)


def read_circuit(path) -> FactCircuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def write_circuit(C: FactCircuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_circuit(C))
