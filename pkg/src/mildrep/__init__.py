"""Minimizers of the interaction energy for mildly repulsive radial potentials."""

from .energy import energy, field_gradient, field_hessian, interaction_matrix, potential_field
from .geometry import ExclusionShape, boundary_curve, eta0, gamma_alpha, in_double_cone, in_exclusion_shape
from .measure import DiscreteMeasure, SignedAtomicMeasure, canonicalize, cardinality, diameter, min_gap
from .optimize import SearchConfig, SearchResult, brute_force, minimize
from .potentials import RadialPotential, check_c4_bound, convexity_radius
from .report import Check, VerificationReport
from .verify import verify_all

__version__ = "0.1.0"

__all__ = [
    "Check",
    "DiscreteMeasure",
    "ExclusionShape",
    "RadialPotential",
    "SearchConfig",
    "SearchResult",
    "SignedAtomicMeasure",
    "VerificationReport",
    "boundary_curve",
    "brute_force",
    "canonicalize",
    "cardinality",
    "check_c4_bound",
    "convexity_radius",
    "diameter",
    "energy",
    "eta0",
    "field_gradient",
    "field_hessian",
    "gamma_alpha",
    "in_double_cone",
    "in_exclusion_shape",
    "interaction_matrix",
    "min_gap",
    "minimize",
    "potential_field",
    "verify_all",
]
