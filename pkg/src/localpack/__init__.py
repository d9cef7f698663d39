"""Local Voronoi cells of translative packings and their colour graphs.

Also bounds the number of neighbours that can shape a truncated cell.
"""
from __future__ import annotations

from .bodies import Ball, Body, Lattice, catalog, core, difference_body, lattice_cell
from .bounds import (
    Truncater,
    cap_bound,
    colony,
    gauss_bonnet_area,
    mu_min,
    refined_cap_bound,
    sphere_body_section_area,
    steiner_neighbor_bound,
    tau_and_m_bounds,
)
from .cell import PointConfig, build_cell, cell_volume, classify_packing, perturb_to_general
from .colorgraph import ColorGraph, adjacency_matrix, canonical_form, constraints_from_graph, graph_from_packing
from .errors import LocalPackError
from .generator import coloring_bound, enumerate_triangulations, reduce_vertex
from .geometry import HalfSpace, Polytope, gauge, intersect_halfspaces, polytope_volume, steiner_volume
from .optimizer import OptProblem, gradient, minimize, objective

__version__ = "0.1.0"
