"""Set representations and operations."""

from zonotube.sets.types import ConstrainedZonotope, Ellipsoid, HPolytope, set_from_dict  # noqa: I001
from zonotube.sets.ops import (
    bounding_box,
    check_c_set,
    contains,
    contract,
    distance_inf,
    gauge,
    gauge_lp,
    is_empty,
    linear_map,
    minkowski_sum,
    sample_point,
    sample_points,
    scale,
    support_function,
)
from zonotube.sets.hrep import (
    enumerate_vertices,
    hpolytope_is_empty,
    hrep_to_czonotope,
    polar,
    pontryagin_diff,
    remove_redundant,
    to_hrep,
)
from zonotube.sets.containment import AffineGain, ContainmentCertificate, containment_check, containment_lp

__all__ = [
    "AffineGain",
    "ConstrainedZonotope",
    "ContainmentCertificate",
    "Ellipsoid",
    "HPolytope",
    "bounding_box",
    "check_c_set",
    "containment_check",
    "containment_lp",
    "contains",
    "contract",
    "distance_inf",
    "enumerate_vertices",
    "gauge",
    "gauge_lp",
    "hpolytope_is_empty",
    "hrep_to_czonotope",
    "is_empty",
    "linear_map",
    "minkowski_sum",
    "polar",
    "pontryagin_diff",
    "remove_redundant",
    "sample_point",
    "sample_points",
    "scale",
    "set_from_dict",
    "support_function",
    "to_hrep",
]
