"""Exact pseudo-Boolean optimization through gain-predicate hyperplane arrangements."""

from .efd_catalog import ConstraintSpec, Direction, build_catalog
from .hq_core import FeatureMatrix, HQForm
from .instances import (
    build_covariance,
    build_linear_fractional,
    build_p2l,
    build_pearson,
    build_pubo_cp,
    build_qubo_dense,
    build_qubo_factors,
    from_document,
)
from .oracle import brute_force, brute_force_ratio, enumerate_stable
from .solver import FuboInstance, Instance, Solution, SolveOptions, solve, solve_fubo

__version__ = "0.1.0"

__all__ = [
    "ConstraintSpec", "Direction", "FeatureMatrix", "FuboInstance", "HQForm", "Instance",
    "Solution", "SolveOptions", "brute_force", "brute_force_ratio", "build_catalog",
    "build_covariance", "build_linear_fractional", "build_p2l", "build_pearson", "build_pubo_cp",
    "build_qubo_dense", "build_qubo_factors", "enumerate_stable", "from_document", "solve",
    "solve_fubo",
]
