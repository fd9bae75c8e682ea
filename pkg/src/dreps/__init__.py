"""Factorised representations of homomorphism sets between finite structures.

Compile Hom(A, B) into union/product circuits along tree decompositions,
query them (count, enumerate, project, restrict, member), transform them,
and run the instance reductions and experiments built on top.
"""
from importlib import resources

from .circuit import (
    BudgetExceeded, CircuitBuilder, CircuitError, FactCircuit, Gate, check_deterministic,
    check_well_defined, flat_representation, format_circuit, materialise, normalize,
    parse_circuit, read_circuit, structurally_deterministic, transversal, write_circuit,
)
from .compile import CompileError, compile_hom, size_bound_check
from .decomp import (
    CompilePlan, DecompositionError, TreeDecomposition, decompose, decompose_structure,
    make_plan, validate,
)
from .query import (
    EnumerationCursor, NotCertifiedError, QueryError, count, enumerate_homs, member,
    project, restrict,
)
from .relstruct import (
    Graph, PartitionedGraph, RelStructure, Signature, StructureError, connected_components,
    gaifman_graph, graph_structure, individualise, parse_structure, read_structure,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "CircuitBuilder", "CircuitError", "FactCircuit", "Gate",
    "check_deterministic", "check_well_defined", "flat_representation", "format_circuit",
    "materialise", "normalize", "parse_circuit", "read_circuit",
    "structurally_deterministic", "transversal", "write_circuit", "CompileError",
    "compile_hom", "size_bound_check", "CompilePlan", "DecompositionError",
    "TreeDecomposition", "decompose", "decompose_structure", "make_plan", "validate",
    "EnumerationCursor", "NotCertifiedError", "QueryError", "count", "enumerate_homs",
    "member", "project", "restrict", "Graph", "PartitionedGraph", "RelStructure",
    "Signature", "StructureError", "connected_components", "gaifman_graph",
    "graph_structure", "individualise", "parse_structure", "read_structure", "fixture",
]


def fixture(*parts: str):
    """Path to a bundled example file, e.g. ``fixture("triangle", "G.struct")``."""
    return resources.files(__name__).joinpath("data", *parts)
