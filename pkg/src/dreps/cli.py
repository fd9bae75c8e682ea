"""Command-line entry point: ``dreps <command> ...``.

Exit status 0 on success, 1 on domain errors (bad files, invalid
decompositions, failed checks), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from contextlib import contextmanager

from . import circuit as circ
from . import decomp, lab, query, reduce
from .compile import compile_hom
from .relstruct import (
    PartitionedGraph, format_structure, gaifman_graph, individualise, read_structure,
    structure_graph,
)


class CommandFailed(Exception):
    """A check ran fine but found problems; message goes to stderr, exit 1."""


@contextmanager
def _out(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _emit_circuit(C: circ.FactCircuit, path: str | None) -> None:
    with _out(path) as fh:
        fh.write(circ.format_circuit(C))


def _emit_structure(S, path: str | None) -> None:
    with _out(path) as fh:
        fh.write(format_structure(S))


def _csv_list(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _allow(text: str) -> tuple[str, list[str]]:
    name, sep, vals = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected ELEMENT=v1,v2,... got {text!r}")
    return name.strip(), _csv_list(vals)


# -- commands ----------------------------------------------------------------------

def cmd_compile(args) -> None:
    A, B = read_structure(args.left), read_structure(args.right)
    if args.td:
        with open(args.td, encoding="utf-8") as fh:
            td = decomp.parse_td(fh.read())
    else:
        td = decomp.decompose_structure(A, args.decomp)
    plan = decomp.make_plan(A, td)
    _emit_circuit(compile_hom(A, B, plan, normal=not args.raw), args.output)


def cmd_count(args) -> None:
    C = circ.read_circuit(args.circuit)
    if args.materialise:
        print(len(circ.materialise(C, args.budget)))
    else:
        print(query.count(C, budget=args.budget))


def cmd_enumerate(args) -> None:
    C = circ.read_circuit(args.circuit)
    dom = sorted(C.sink_domain())
    with _out(args.output_file) as fh:
        if args.header:
            fh.write("\t".join(C.left[a] for a in dom) + "\n")
        if args.materialise:
            homs = iter(sorted(circ.materialise(C, args.budget)))
        else:
            homs = query.enumerate_homs(C, budget=args.budget)
        for i, h in enumerate(homs):
            if args.limit is not None and i >= args.limit:
                break
            vals = dict(h)
            fh.write("\t".join(C.right[vals[a]] for a in dom) + "\n")


def cmd_project(args) -> None:
    C = circ.read_circuit(args.circuit)
    _emit_circuit(query.project(C, _csv_list(args.keep)), args.output)


def cmd_restrict(args) -> None:
    C = circ.read_circuit(args.circuit)
    filters: dict[str, list[str]] = {}
    for name, vals in args.allow:
        filters.setdefault(name, []).extend(vals)
    _emit_circuit(query.restrict(C, filters), args.output)


def cmd_check(args) -> None:
    C = circ.read_circuit(args.circuit)
    problems = circ.check_well_defined(C)
    for p in problems:
        print(p)
    if problems:
        raise CommandFailed(f"{len(problems)} well-definedness violation(s)")
    report = circ.check_deterministic(C, args.budget)
    print(f"well-defined: yes\ngates: {C.num_gates}\nwires: {C.num_wires}\nsize: {C.size}")
    line = f"deterministic: {report.status} ({report.method})"
    if report.status == "refuted":
        h = ", ".join(f"{C.left[a]}->{C.right[b]}" for a, b in report.witness)
        line += f" at g{report.gate}, mapping {{{h}}} reached twice"
    print(line)
    if report.status == "refuted":
        raise CommandFailed("circuit is not deterministic")


def cmd_transversal(args) -> None:
    _emit_circuit(circ.transversal(circ.read_circuit(args.circuit), args.budget), args.output)


def cmd_normalize(args) -> None:
    _emit_circuit(circ.normalize(circ.read_circuit(args.circuit)), args.output)


def cmd_decompose(args) -> None:
    A = read_structure(args.structure)
    td = decomp.decompose_structure(A, args.method)
    with _out(args.output) as fh:
        fh.write(decomp.format_td(td, A))


def cmd_validate_td(args) -> None:
    A = read_structure(args.structure)
    with open(args.td, encoding="utf-8") as fh:
        td = decomp.parse_td(fh.read())
    problems = decomp.validate(td, gaifman_graph(A))
    for p in problems:
        print(p)
    if problems:
        raise CommandFailed(f"{len(problems)} violation(s)")
    print(f"valid, width {td.width}")


def cmd_validate_am(args) -> None:
    m = reduce.read_map(args.map)
    problems = reduce.validate_almost_minor(m)
    for p in problems:
        print(p)
    if problems:
        raise CommandFailed(f"{len(problems)} violation(s)")
    print("valid minor map" if m.is_minor_map else "valid almost-minor map")


def cmd_reduce(args) -> None:
    kind = args.reduction
    if kind == "individualise":
        _emit_structure(individualise(read_structure(args.inputs[0])), args.output)
    elif kind == "gaifman":
        A_id = read_structure(args.inputs[0])
        H = PartitionedGraph.from_structure(read_structure(args.inputs[1]))
        _emit_structure(reduce.gaifman_lift(A_id, H), args.output)
    elif kind == "lift":
        G = structure_graph(read_structure(args.inputs[0]))
        H = structure_graph(read_structure(args.inputs[1]))
        _emit_structure(reduce.lift_graph(G, H).structure, args.output)
    elif kind == "hstar":
        m = reduce.read_map(args.inputs[0])
        H = PartitionedGraph.from_structure(read_structure(args.inputs[1]))
        _emit_structure(reduce.build_hstar(m, H).structure, args.output)
    elif kind == "recover":
        m = reduce.read_map(args.inputs[0])
        C = circ.read_circuit(args.inputs[1])
        H = PartitionedGraph.from_structure(read_structure(args.inputs[2]))
        _emit_circuit(reduce.recover_circuit(m, C, H), args.output)


_REDUCE_ARITY = {"individualise": 1, "gaifman": 2, "lift": 2, "hstar": 2, "recover": 3}


def cmd_lab(args) -> None:
    exp = args.experiment
    if exp == "lemma-g":
        seeds = range(args.seed, args.seed + args.seeds)
        rows = lab.experiment_random_graphs(args.n or [32, 64, 128], seeds, kmax=args.k,
                                      biclique_budget=args.budget, timing=args.timing)
    elif exp == "scaling":
        rows = []
        for fam in args.family or list(lab.FAMILIES):
            rows += lab.experiment_size_scaling(fam, args.targets or (100, 200, 400, 800, 1600),
                                                seed=args.seed, timing=args.timing)
    else:
        rows = []
        for n in args.n or [8, 16, 32]:
            G = lab.gen_random_graph(lab.RandomGraphSpec(n, seed=args.seed))
            res = lab.biclique_cover_cost(G)
            rows.append({"n": n, "seed": args.seed, "m": G.m, "cost": res.cost,
                         "bicliques": len(res.cover), "exact": int(res.exact),
                         "circuit_size": res.circuit.size})
    with _out(args.output) as fh:
        lab.write_rows(rows, fh)


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dreps", description=(
        "Compile, query and transform factorised representations of homomorphism sets."))
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, out=True):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        if out:
            sp.add_argument("-o", "--output", help="output file (default: stdout)")
        return sp

    budget = dict(type=int, default=circ.DEFAULT_BUDGET, help="materialisation budget")

    sp = add("compile", cmd_compile, "compile Hom(A,B) into a circuit")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--decomp", choices=["minfill", "mindegree", "exact"], default="minfill")
    sp.add_argument("--td", help="use this .td decomposition instead of computing one")
    sp.add_argument("--raw", action="store_true", help="skip normalisation")

    sp = add("count", cmd_count, "count represented mappings", out=False)
    sp.add_argument("circuit")
    sp.add_argument("--materialise", action="store_true",
                    help="evaluate the set directly instead of requiring determinism")
    sp.add_argument("--budget", **budget)

    sp = add("enumerate", cmd_enumerate, "list represented mappings", out=False)
    sp.add_argument("circuit")
    sp.add_argument("--limit", type=int)
    sp.add_argument("--output", choices=["tsv"], default="tsv", help="output format")
    sp.add_argument("-o", dest="output_file", help="output file (default: stdout)")
    sp.add_argument("--header", action="store_true", help="print element names first")
    sp.add_argument("--materialise", action="store_true",
                    help="evaluate the set directly instead of requiring determinism")
    sp.add_argument("--budget", **budget)

    sp = add("project", cmd_project, "project onto a subset of left elements")
    sp.add_argument("circuit")
    sp.add_argument("--keep", required=True, help="comma-separated elements")

    sp = add("restrict", cmd_restrict, "filter values of left elements")
    sp.add_argument("circuit")
    sp.add_argument("--allow", type=_allow, action="append", required=True,
                    metavar="ELEMENT=v1,v2", help="repeatable")

    sp = add("check", cmd_check, "well-definedness and determinism report", out=False)
    sp.add_argument("circuit")
    sp.add_argument("--budget", **budget)

    sp = add("transversal", cmd_transversal, "treelike expansion")
    sp.add_argument("circuit")
    sp.add_argument("--budget", **budget)

    sp = add("normalize", cmd_normalize, "normal form")
    sp.add_argument("circuit")

    sp = add("decompose", cmd_decompose, "tree decomposition of a structure")
    sp.add_argument("structure")
    sp.add_argument("--method", choices=["minfill", "mindegree", "exact"], default="minfill")

    sp = add("validate-td", cmd_validate_td, "validate a .td file", out=False)
    sp.add_argument("structure")
    sp.add_argument("td")

    sp = add("validate-am", cmd_validate_am, "validate an almost-minor map", out=False)
    sp.add_argument("map")

    sp = add("reduce", cmd_reduce, "instance constructions and circuit recovery")
    sp.add_argument("reduction", choices=list(_REDUCE_ARITY))
    sp.add_argument("inputs", nargs="+", help=(
        "individualise A | gaifman A_id H.pg | lift G H | hstar map.am H.pg | "
        "recover map.am C.dcirc H.pg"))

    sp = add("lab", cmd_lab, "experiments, CSV output")
    sp.add_argument("experiment", choices=["lemma-g", "scaling", "biclique-cover"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--seeds", type=int, default=10, help="number of seeds (lemma-g)")
    sp.add_argument("--n", type=_int_list, help="comma-separated vertex counts")
    sp.add_argument("--k", type=int, default=5, help="largest clique size (lemma-g)")
    sp.add_argument("--budget", type=int, default=20_000, help="biclique search budget")
    sp.add_argument("--family", action="append", choices=list(lab.FAMILIES))
    sp.add_argument("--targets", type=_int_list, help="right-hand sizes (scaling)")
    sp.add_argument("--timing", action="store_true", help="add a runtime column")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "reduce" and len(args.inputs) != _REDUCE_ARITY[args.reduction]:
            parser.error(
                f"reduce {args.reduction} takes {_REDUCE_ARITY[args.reduction]} input file(s)")
    except SystemExit as exc:  # usage errors exit 2, --help exits 0
        return exc.code if isinstance(exc.code, int) else 2
    try:
        args.func(args)
    except CommandFailed as exc:
        print(f"dreps: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"dreps: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
