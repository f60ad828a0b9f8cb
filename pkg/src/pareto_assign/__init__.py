"""Exact multi-objective assignment of products to packaging lines."""

from .model import (
    Assignment,
    Feature,
    Instance,
    Line,
    LineClass,
    ObjectiveVector,
    Product,
    ProductClass,
    build_milp,
    check_feasible,
    evaluate,
    validate_instance,
)
from .solver import solve_lp, solve_milp

__version__ = "0.1.0"
