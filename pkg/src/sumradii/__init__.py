"""Primal-dual approximation algorithms for Minimum Sum of Radii.

The package works in exact rational arithmetic throughout.  The main entry
points are :func:`sumradii.solver.solve` for the full pipelines and the
building blocks re-exported below.
"""

from .bench import brute_force_opt, diameter_cost, random_instance, ratio_report, tight_instance
from .dual import DualSolution, components, dual_objective, slack, uncovered
from .envelope import Affine, PiecewiseAffine, lower_envelope
from .metric import (
    UNREACHABLE,
    Cardinality,
    ColoredWeight,
    ExplicitRadius,
    InfeasibleError,
    InternalError,
    MetricInstance,
    Pair,
    ball,
    candidate_pairs,
    guess_prefixes,
    min_feasible_radius,
    verify_metric,
)
from .outliers import iterate_to_fixpoint, mix_orderly_structured, run_subroutine
from .primal_dual import build_structured_pairs, raise_duals
from .rounding import ANY_CENTER, COLOCATED, Solution, cover_component, creplaced, validate_solution
from .solver import solve

__version__ = "0.1.0"

__all__ = [
    "ANY_CENTER",
    "Affine",
    "COLOCATED",
    "Cardinality",
    "ColoredWeight",
    "DualSolution",
    "ExplicitRadius",
    "InfeasibleError",
    "InternalError",
    "MetricInstance",
    "Pair",
    "PiecewiseAffine",
    "Solution",
    "UNREACHABLE",
    "ball",
    "brute_force_opt",
    "build_structured_pairs",
    "candidate_pairs",
    "components",
    "cover_component",
    "creplaced",
    "diameter_cost",
    "dual_objective",
    "guess_prefixes",
    "iterate_to_fixpoint",
    "lower_envelope",
    "min_feasible_radius",
    "mix_orderly_structured",
    "raise_duals",
    "random_instance",
    "ratio_report",
    "run_subroutine",
    "slack",
    "solve",
    "tight_instance",
    "uncovered",
    "validate_solution",
    "verify_metric",
]
