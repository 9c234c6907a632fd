"""SO(3)_{2m} category data: nimreps, modular data, cells, path algebras."""

from .cells import (CellSystem, GaugeTransform, canonical_forms, cell_closed_form,
                    find_equivalence, gauge_transform, solve_cells, verify_cells)
from .modular import ModularData, classify_invariants, modular_data, verlinde
from .nimrep import FAMILIES, NimrepGraph, build_graph, exponents
from .pathalg import Generators, PathOperator, jw, jw_basis, path_space, t_op, tl_relations
from .preproj import HilbertSeries, graded_dim_direct, hilbert_closed, resolution_check
from .qnum import QContext, gauss_product, make_context, qint

__all__ = [
    "QContext", "make_context", "qint", "gauss_product",
    "FAMILIES", "NimrepGraph", "build_graph", "exponents",
    "ModularData", "modular_data", "verlinde", "classify_invariants",
    "CellSystem", "GaugeTransform", "canonical_forms", "cell_closed_form", "verify_cells",
    "gauge_transform", "find_equivalence", "solve_cells",
    "PathOperator", "Generators", "path_space", "jw", "jw_basis", "tl_relations", "t_op",
    "HilbertSeries", "graded_dim_direct", "hilbert_closed", "resolution_check",
]
__version__ = "0.1.0"
