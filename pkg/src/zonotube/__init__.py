"""Constrained-zonotope tube MPC with set-membership perception observers."""

from zonotube.config import Tolerances, get_tolerances, set_tolerances
from zonotube.errors import (
    DimensionMismatchError,
    EmptySetError,
    GaugeDomainError,
    InfeasibleError,
    ProjectionBudgetError,
    SetError,
)
from zonotube.sets import ConstrainedZonotope, Ellipsoid, HPolytope

__version__ = "0.1.0"

__all__ = [
    "ConstrainedZonotope",
    "DimensionMismatchError",
    "Ellipsoid",
    "EmptySetError",
    "GaugeDomainError",
    "HPolytope",
    "InfeasibleError",
    "ProjectionBudgetError",
    "SetError",
    "Tolerances",
    "get_tolerances",
    "set_tolerances",
]
