"""cartproj: exact and empirical machinery for conformal projections of
cartesian products of fractal sets."""

__version__ = "0.1.0"

from .exactlin import BlockStructure, RationalMatrix, as_rational
from .mstar import DimensionVector, compute_mstar, check_transversality, mstar_gap_class
from .weights import WeightsInstance, find_weights, verify_vertex_claim

__all__ = [
    "__version__",
    "BlockStructure",
    "RationalMatrix",
    "as_rational",
    "DimensionVector",
    "compute_mstar",
    "check_transversality",
    "mstar_gap_class",
    "WeightsInstance",
    "find_weights",
    "verify_vertex_claim",
]
