"""Exact and heuristic solvers for touring discounted planar sets."""

from .bounds import compute_bounds, preprocess
from .benders import benders_solve
from .heuristic import heuristic_solve
from .instance import Instance, generate, load_instance, read_instance, write_instance
from .touring import Tour, evaluate, solve_fixed_tour

__all__ = [
    "Instance", "Tour", "benders_solve", "compute_bounds", "evaluate", "generate",
    "heuristic_solve", "load_instance", "preprocess", "read_instance", "solve_fixed_tour",
    "write_instance",
]
__version__ = "0.1.0"
