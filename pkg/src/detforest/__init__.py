"""Determinantal spanning-forest measures on periodic planar graphs."""

__version__ = "0.1.0"

from .graph import (Edge, FiniteCover, PeriodicGraph, cover, electrical_transform,
                    line_graph, load_graph, square_grid_graph, strip_grid_graph,
                    triangular_grid_graph, width)
from .laplacian import brute_force_partition, char_poly, delta_matrix
from .laurent import (LaurentPoly1, LaurentPoly2, NewtonPolygon, basis_change,
                      eval_poly, interpolate_from_grid, newton_polygon, u_expansion)
from .kernel import (cylinder_kernel, edge_probability, strip_kernel_entry,
                     torus_kernel_entry, transfer_current)
from .sampling import (ForestConfig, MtsfChain, dpp_sample, homology_class,
                       make_rng, mcmc_sample, wilson_forest)
from .spectral import (correlation_class, growth_rate, harnack_check, ronkin,
                       special_divisor_grid, strip_roots, surface_tension)
from .limitshape import (HeightField, TensionTable, build_tension_table,
                         extract_leaves, minimize_height, rectangle_mesh)

__all__ = [
    "Edge", "FiniteCover", "PeriodicGraph", "cover", "electrical_transform",
    "line_graph", "load_graph", "square_grid_graph", "strip_grid_graph",
    "triangular_grid_graph", "width",
    "brute_force_partition", "char_poly", "delta_matrix",
    "LaurentPoly1", "LaurentPoly2", "NewtonPolygon", "basis_change", "eval_poly",
    "interpolate_from_grid", "newton_polygon", "u_expansion",
    "cylinder_kernel", "edge_probability", "strip_kernel_entry",
    "torus_kernel_entry", "transfer_current",
    "ForestConfig", "MtsfChain", "dpp_sample", "homology_class", "make_rng",
    "mcmc_sample", "wilson_forest",
    "correlation_class", "growth_rate", "harnack_check", "ronkin",
    "special_divisor_grid", "strip_roots", "surface_tension",
    "HeightField", "TensionTable", "build_tension_table", "extract_leaves",
    "minimize_height", "rectangle_mesh",
]
