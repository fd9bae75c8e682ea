"""Brute-force homomorphism enumeration, used as ground truth in tests and checks."""
from __future__ import annotations

from itertools import product

from .circuit import PartialHom
from .relstruct import RelStructure

__all__ = ["all_maps_homs", "backtrack_homs", "hom_count", "is_hom"]


def is_hom(A: RelStructure, B: RelStructure, values: tuple[int, ...]) -> bool:
    for sym, rel in A.relations.items():
        target = B.relations.get(sym, frozenset())
        for t in rel:
            if tuple(values[x] for x in t) not in target:
                return False
    return True


def all_maps_homs(A: RelStructure, B: RelStructure) -> set[PartialHom]:
    """Check every one of the |B|^|A| maps.  Only for tiny instances."""
    n = len(A)
    return {tuple(enumerate(vals)) for vals in product(range(len(B)), repeat=n)
            if is_hom(A, B, vals)}


def backtrack_homs(A: RelStructure, B: RelStructure) -> set[PartialHom]:
    """Assign elements in universe order; check each tuple once its last element is set."""
    n = len(A)
    due: list[list[tuple[tuple[int, ...], frozenset]]] = [[] for _ in range(n)]
    for sym, rel in A.relations.items():
        target = B.relations.get(sym, frozenset())
        for t in rel:
            due[max(t)].append((t, target))
    out: set[PartialHom] = set()
    vals = [0] * n
    nb = len(B)

    def go(i: int) -> None:
        if i == n:
            out.add(tuple(enumerate(vals)))
            return
        for b in range(nb):
            vals[i] = b
            if all(tuple(vals[x] for x in t) in target for t, target in due[i]):
                go(i + 1)

    go(0)
    return out


def hom_count(A: RelStructure, B: RelStructure) -> int:
    return len(backtrack_homs(A, B))
