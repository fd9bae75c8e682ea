"""Seeded random instances and circuits shared by the test modules."""
from __future__ import annotations

import random
from collections.abc import Sequence

from dreps.circuit import CircuitBuilder, FactCircuit
from dreps.relstruct import RelStructure, Signature


def random_signature(rng: random.Random, max_symbols: int = 3, max_arity: int = 3) -> Signature:
    k = rng.randint(1, max_symbols)
    return Signature(tuple((f"R{i}", rng.randint(1, max_arity)) for i in range(k)))


def random_structure(rng: random.Random, sig: Signature, n: int, density: float,
                     prefix: str, min_tuples: int = 0) -> RelStructure:
    universe = tuple(f"{prefix}{i}" for i in range(n))
    rels = {}
    for name, r in sig.symbols:
        cells = n ** r
        if cells <= 600:
            pool = [tuple(rng.randrange(n) for _ in range(r)) for _ in range(cells)]
            ts = {t for t in pool if rng.random() < density}
        else:
            ts = {tuple(rng.randrange(n) for _ in range(r)) for _ in range(int(density * 200))}
        while len(ts) < min_tuples:
            ts.add(tuple(rng.randrange(n) for _ in range(r)))
        rels[name] = frozenset(ts)
    return RelStructure(sig, universe, rels)


def random_instance(seed: int, max_left: int = 6, max_right: int = 8):
    """A pair (A, B) over one random signature with arities up to 3."""
    rng = random.Random(seed)
    sig = random_signature(rng)
    na = rng.randint(1, max_left)
    nb = rng.randint(1, max_right)
    A = random_structure(rng, sig, na, rng.uniform(0.02, 0.25), "a", min_tuples=1)
    B = random_structure(rng, sig, nb, rng.uniform(0.2, 0.8), "b")
    return A, B


def random_circuit(seed: int, n_left: int = 4, n_right: int = 3, share: float = 0.3,
                   max_fanout: int = 3) -> FactCircuit:
    """A random well-defined circuit; gates are reused across parents with
    probability ``share``, so results are usually not treelike and often not
    deterministic."""
    rng = random.Random(seed)
    left = tuple(f"x{i}" for i in range(n_left))
    right = tuple(f"v{i}" for i in range(n_right))
    b = CircuitBuilder(left, right, share_inputs=False)
    pool: dict[frozenset[int], list[int]] = {}

    def gen(dom: frozenset[int], depth: int) -> int:
        if pool.get(dom) and rng.random() < share:
            return rng.choice(pool[dom])
        if len(dom) == 1 and (depth > 2 or rng.random() < 0.6):
            g = b.input(next(iter(dom)), rng.randrange(n_right))
        elif len(dom) > 1 and (depth > 2 or rng.random() < 0.6):
            items = sorted(dom)
            rng.shuffle(items)
            cut = sorted(rng.sample(range(1, len(items)), rng.randint(1, min(2, len(items) - 1))))
            parts = [frozenset(items[i:j]) for i, j in zip([0] + cut, cut + [len(items)])]
            g = b.product([gen(p, depth + 1) for p in parts])
        else:
            g = b.union([gen(dom, depth + 1) for _ in range(rng.randint(1, max_fanout))])
        pool.setdefault(dom, []).append(g)
        return g

    dom = frozenset(rng.sample(range(n_left), rng.randint(1, n_left)))
    return b.build(gen(dom, 0))


def random_partitioned(rng: random.Random, classes: Sequence[str], max_class: int = 3,
                       density: float = 0.5):
    """A graph partitioned by ``classes`` with 1..max_class vertices per class."""
    from dreps.relstruct import PartitionedGraph

    members = {x: [f"{x}.{i}" for i in range(rng.randint(1, max_class))] for x in classes}
    vertices = [v for vs in members.values() for v in vs]
    edges = [(u, v) for i, u in enumerate(vertices) for v in vertices[i + 1:]
             if rng.random() < density]
    return PartitionedGraph.build(vertices, edges, members)


def random_almost_minor(rng: random.Random, n: int = 3):
    """A valid almost-minor map from a random connected graph on ``n`` vertices.

    The target copies the source, adds a junction vertex next to both ends of
    some edges, and hangs duplicate vertices off some source vertices.
    """
    from dreps.reduce import AlmostMinorMap
    from dreps.relstruct import Graph

    xs = [f"x{i}" for i in range(n)]
    xe = [(xs[i], xs[rng.randrange(i)]) for i in range(1, n)]
    xe += [(xs[i], xs[j]) for i in range(n) for j in range(i + 1, n)
           if (xs[j], xs[i]) not in xe and rng.random() < 0.3]
    ys = list(xs)
    ye = list(xe)
    mapping = {x: [x] for x in xs}
    for k, (a, b) in enumerate(xe):
        if rng.random() < 0.5:
            j = f"j{k}"
            ys.append(j)
            ye += [(j, a), (j, b)]
            mapping[j] = [a, b]
    for k, x in enumerate(xs):
        if rng.random() < 0.4:
            d = f"d{k}"
            ys.append(d)
            ye.append((d, x))
            mapping[d] = [x]
    return AlmostMinorMap.from_named(Graph.from_named(xs, xe), Graph.from_named(ys, ye), mapping)
