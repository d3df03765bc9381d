"""Exception types raised by the toolpath pipeline.

Each family maps to one CLI exit code, see :data:`EXIT_CODES`.
"""


class IsopathError(Exception):
    """Base class for all pipeline errors."""


class InvalidInputError(IsopathError, ValueError):
    """Malformed files, bad arguments or violated preconditions."""


class DegenerateGeometryError(IsopathError):
    """A neighborhood or frame is too degenerate to compute with."""


class TopologyError(IsopathError):
    """Boundary cannot be ordered or split into the requested parts."""


class SolverError(IsopathError):
    """The sparse Laplace system could not be solved.

    ``residual`` holds the relative residual of the best attempt, or
    ``None`` when the system was rejected before solving.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OutOfDomainError(IsopathError):
    """A parametric point lies outside the parameter domain."""


class PlanningError(IsopathError):
    """Base class for failures while generating tool paths."""


class InvalidCurvatureError(PlanningError, ValueError):
    """Curvature radius too small for the requested chord deviation."""


class GougingError(PlanningError):
    """Concave region tighter than the cutter radius."""


class TooSparseError(PlanningError):
    """Not enough points to plan a single path."""


EXIT_CODES = (
    (InvalidInputError, 2),
    (TopologyError, 3),
    (DegenerateGeometryError, 3),
    (SolverError, 4),
    (PlanningError, 5),
    (OutOfDomainError, 5),
)


def exit_code_for(exc):
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1
