"""Finite-dimensional cocoercivity toolkit.

Sampling-based estimators and falsifiers for Lipschitz and cocoercivity
moduli, a certifier for the Lipschitz / convexity / cocoercivity
equivalence for gradients, a catalog of test functions and prox-friendly
terms, and forward-backward solvers (discrete and continuous time).
"""

from .certifier import BHReport, LocalCocoReport, bh_check, local_coco_search, slice_check
from .core import Ball, Box, Intersection, sample_pairs, sample_points
from .estimators import Certificate, ModulusReport, check_cocoercive, check_lipschitz, estimate_moduli
from .splitting import InclusionProblem, SolveTrace, dyn_integrate, forward_backward

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "Intersection", "sample_pairs", "sample_points",
    "Certificate", "ModulusReport", "check_cocoercive", "check_lipschitz", "estimate_moduli",
    "BHReport", "LocalCocoReport", "bh_check", "local_coco_search", "slice_check",
    "InclusionProblem", "SolveTrace", "dyn_integrate", "forward_backward",
]
