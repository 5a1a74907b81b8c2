"""Floating functions of convex potentials and affine surface area of
log-concave functions, computed numerically in dimensions 1 and 2."""

from .convexfn import ConvexFunction, catalog
from .epigraph import HyperplaneCut, cap_volume, rolling_function
from .experiments import constant_c, proposition_ratio, theorem_ratio
from .floating import FloatParams, floating_log_concave, floating_value
from .fnspec import parse_function
from .numerics import QuadratureSpec, SearchSpec
from .surface import asa, asa_alternative, asp_body

__all__ = [
    "ConvexFunction",
    "catalog",
    "HyperplaneCut",
    "cap_volume",
    "rolling_function",
    "constant_c",
    "theorem_ratio",
    "proposition_ratio",
    "FloatParams",
    "floating_value",
    "floating_log_concave",
    "parse_function",
    "QuadratureSpec",
    "SearchSpec",
    "asa",
    "asa_alternative",
    "asp_body",
]
