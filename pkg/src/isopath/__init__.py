"""Iso-parametric tool path planning on unorganized point clouds."""

from .cloud import PointCloud, classify_boundary, estimate_normal, fair
from .errors import (
    DegenerateGeometryError,
    GougingError,
    InvalidCurvatureError,
    InvalidInputError,
    IsopathError,
    OutOfDomainError,
    PlanningError,
    SolverError,
    TooSparseError,
    TopologyError,
)
from .param import (
    Disk,
    Parameterization,
    Rect,
    build_laplacian,
    map_boundary_disk,
    map_boundary_rect,
    optimal_weights,
    order_boundary,
    parameterize,
    solve_parameterization,
)

__version__ = "0.1.0"

__all__ = [
    "PointCloud",
    "classify_boundary",
    "estimate_normal",
    "fair",
    "DegenerateGeometryError",
    "GougingError",
    "InvalidCurvatureError",
    "InvalidInputError",
    "IsopathError",
    "OutOfDomainError",
    "PlanningError",
    "SolverError",
    "TooSparseError",
    "TopologyError",
    "Disk",
    "Parameterization",
    "Rect",
    "build_laplacian",
    "map_boundary_disk",
    "map_boundary_rect",
    "optimal_weights",
    "order_boundary",
    "parameterize",
    "solve_parameterization",
]
