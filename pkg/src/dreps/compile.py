"""Compile Hom(A, B) into a deterministic circuit along a rooted tree decomposition."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .circuit import CircuitBuilder, FactCircuit, normalize
from .decomp import CompilePlan, decompose_structure, make_plan
from .relstruct import RelStructure

__all__ = ["CompileError", "compile_hom", "compile", "bag_tables", "SizeReport", "size_bound_check"]


class CompileError(ValueError):
    pass


def _check_signatures(A: RelStructure, B: RelStructure) -> None:
    barity = B.signature.arity
    for name, r in A.signature.symbols:
        if name not in barity:
            raise CompileError(f"right structure lacks symbol {name!r}")
        if barity[name] != r:
            raise CompileError(
                f"symbol {name!r} has arity {r} on the left, {barity[name]} on the right")


def _constraint(tup: tuple[int, ...], rel) -> tuple[tuple[int, ...], set[tuple[int, ...]]]:
    """Translate a left tuple into a relation over its distinct elements.

    Right tuples must repeat values wherever the left tuple repeats elements.
    """
    first: dict[int, int] = {}
    for j, v in enumerate(tup):
        first.setdefault(v, j)
    vars_ = tuple(first)
    keep = tuple(first.values())
    same = [(j, first[v]) for j, v in enumerate(tup) if first[v] != j]
    allowed = {tuple(t[j] for j in keep) for t in rel if all(t[i] == t[k] for i, k in same)}
    return vars_, allowed


def _bag_rows(order: list[int], cons, nb: int) -> list[tuple[int, ...]]:
    """All assignments of ``order`` satisfying every constraint, by backtracking.

    For each constraint and each of its variables an index maps the values of
    its earlier variables to the values allowed next.
    """
    pos = {v: i for i, v in enumerate(order)}
    lookups: list[list[tuple[dict, list[int]]]] = [[] for _ in order]
    for cvars, rel in cons:
        perm = sorted(range(len(cvars)), key=lambda j: pos[cvars[j]])
        vs = [cvars[j] for j in perm]
        rel2 = [tuple(t[j] for j in perm) for t in rel]
        for i, v in enumerate(vs):
            index: dict[tuple[int, ...], set[int]] = {}
            for t in rel2:
                index.setdefault(t[:i], set()).add(t[i])
            lookups[pos[v]].append((index, [pos[u] for u in vs[:i]]))
    everything = range(nb)
    rows: list[tuple[int, ...]] = []
    assign = [0] * len(order)

    def extend(i: int) -> None:
        if i == len(order):
            rows.append(tuple(assign))
            return
        cands = None
        for index, prefix in lookups[i]:
            s = index.get(tuple(assign[p] for p in prefix))
            if not s:
                return
            cands = set(s) if cands is None else cands & s
            if not cands:
                return
        for b in (sorted(cands) if cands is not None else everything):
            assign[i] = b
            extend(i + 1)

    extend(0)
    return rows


def _project(rows, positions):
    return {tuple(r[p] for p in positions) for r in rows}


def bag_tables(A: RelStructure, B: RelStructure, plan: CompilePlan):
    """Per node: sorted bag variables and the rows surviving both semi-join passes."""
    td = plan.decomposition
    nb = len(B)
    order_of = [sorted(b) for b in td.bags]
    tables: list[list[tuple[int, ...]]] = []
    for t, bag in enumerate(order_of):
        cons = [_constraint(tup, B.relations[sym]) for sym, tup in plan.constraints_at(t)]
        tables.append(_bag_rows(bag, cons, nb))

    def sep_positions(t: int, other: int) -> tuple[list[int], list[int]]:
        shared = sorted(td.bags[t] & td.bags[other])
        return ([order_of[t].index(v) for v in shared], [order_of[other].index(v) for v in shared])

    pre = td.preorder()
    for t in reversed(pre):
        for c in td.children[t]:
            mine, theirs = sep_positions(t, c)
            ok = _project(tables[c], theirs)
            tables[t] = [r for r in tables[t] if tuple(r[p] for p in mine) in ok]
    for t in pre:
        for c in td.children[t]:
            mine, theirs = sep_positions(t, c)
            ok = _project(tables[t], mine)
            tables[c] = [r for r in tables[c] if tuple(r[p] for p in theirs) in ok]
    return order_of, tables


def compile_hom(A: RelStructure, B: RelStructure, plan: CompilePlan | None = None,
                method: str = "minfill", normal: bool = True) -> FactCircuit:
    """A deterministic circuit representing every homomorphism from A to B.

    Symbols of B that A does not use are ignored.  The result carries a
    determinism certificate.
    """
    _check_signatures(A, B)
    if plan is None:
        plan = make_plan(A, decompose_structure(A, method))
    elif plan.structure != A:
        raise CompileError("plan was made for a different left structure")
    left, right = A.universe, B.universe
    if not left:
        return FactCircuit.unit(left, right)
    lonely = A.isolated()
    if lonely:
        warnings.warn(f"elements in no tuple are unconstrained: {', '.join(lonely)}", stacklevel=2)
    if not right:
        return FactCircuit.empty(left, right)
    td = plan.decomposition
    order_of, tables = bag_tables(A, B, plan)
    root = td.root
    if not tables[root]:
        return FactCircuit.empty(left, right)

    b = CircuitBuilder(left, right, share_inputs=True)
    # unions[t][separator value] -> gate id, or None when it stands for the empty mapping
    unions: list[dict[tuple[int, ...], int | None]] = [dict() for _ in td.bags]
    for t in reversed(td.preorder()):
        bag = order_of[t]
        sep = sorted(td.separator(t))
        sep_pos = [bag.index(v) for v in sep]
        own = [(bag.index(v), v) for v in plan.anchored(t)]
        kids = [(c, [bag.index(v) for v in sorted(td.separator(c))]) for c in td.children[t]]
        groups: dict[tuple[int, ...], list[int | None]] = {}
        for row in tables[t]:
            inputs = [b.input(v, row[p]) for p, v in own]
            below = [unions[c][tuple(row[p] for p in cpos)] for c, cpos in kids]
            parts = inputs + [g for g in below if g is not None]
            gate = b.product(parts) if parts else None
            groups.setdefault(tuple(row[p] for p in sep_pos), []).append(gate)
        for key, prods in groups.items():
            unions[t][key] = None if prods == [None] else b.union(prods)
    sink = unions[root][()]
    if sink is None:
        return FactCircuit.unit(left, right)
    C = b.build(sink, deterministic=True)
    return normalize(C) if normal else C


compile = compile_hom  # noqa: A001


@dataclass(frozen=True)
class SizeReport:
    circuit_size: int
    left_norm: int
    right_norm: int
    width: int
    ratio: float
    padded_ratio: float

    def as_dict(self) -> dict:
        return {"circuit_size": self.circuit_size, "left_norm": self.left_norm,
                "right_norm": self.right_norm, "width": self.width, "ratio": self.ratio,
                "padded_ratio": self.padded_ratio}


def _ratio(size: int, bound: int) -> float:
    if size == 0:
        return 0.0
    return float("inf") if bound == 0 else size / bound


def size_bound_check(A: RelStructure, B: RelStructure, plan: CompilePlan,
                     C: FactCircuit) -> SizeReport:
    """Compare circuit size against ``|A|^2 * |B|^(width+1)`` (sizes as tuple counts).

    ``padded_ratio`` uses tuple count plus universe size on both sides, which
    stays meaningful when a structure has isolated elements.
    """
    width = plan.decomposition.width
    size = C.size
    bound = A.norm ** 2 * B.norm ** (width + 1)
    padded = (A.norm + len(A)) ** 2 * (B.norm + len(B)) ** (width + 1)
    return SizeReport(size, A.norm, B.norm, width, _ratio(size, bound), _ratio(size, padded))
