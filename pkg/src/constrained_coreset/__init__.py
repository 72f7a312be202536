"""Coresets for clustering under capacity and structure constraints, with outliers."""

from __future__ import annotations

from .certify import CertifyReport, certify_coreset
from .constraints import StructureConstraint, parse_constraint
from .cost import CostResult, min_cost_assignment, robust_cost
from .decompose import (
    ApproxSolution,
    decompose_rings_groups,
    tri_criteria_approx,
    two_point_coreset,
)
from .experiment import ExperimentConfig, run_experiment
from .flow import min_cost_flow
from .hus import Coreset, hus_build, named_rng
from .matroid import Matroid, find_strong_augmenting_path, path_decompose
from .metric import MetricSpace, WeightedPointSet
from .oat import oat_exact_lp, oat_transport

__all__ = [
    "ApproxSolution",
    "CertifyReport",
    "Coreset",
    "CostResult",
    "ExperimentConfig",
    "Matroid",
    "MetricSpace",
    "StructureConstraint",
    "WeightedPointSet",
    "certify_coreset",
    "decompose_rings_groups",
    "find_strong_augmenting_path",
    "hus_build",
    "min_cost_assignment",
    "min_cost_flow",
    "named_rng",
    "oat_exact_lp",
    "oat_transport",
    "parse_constraint",
    "path_decompose",
    "robust_cost",
    "run_experiment",
    "tri_criteria_approx",
    "two_point_coreset",
]

__version__ = "0.1.0"
