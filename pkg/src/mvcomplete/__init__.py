"""Convex multi-view matrix completion with overlapping trace norms."""

__version__ = "0.1.0"

from .admm import AdmmConfig, admm_solve
from .apg import ApgConfig, apg_solve
from .datagen import SynthSpec, gen_synthetic_problem
from .loss import LossKind
from .model import (LatentBlocks, ModelSpec, MultiViewProblem, SolveResult, ViewData,
                    assemble_prediction, objective, validate_problem)

__all__ = [
    "AdmmConfig", "ApgConfig", "LatentBlocks", "LossKind", "ModelSpec", "MultiViewProblem",
    "SolveResult", "SynthSpec", "ViewData", "admm_solve", "apg_solve", "assemble_prediction",
    "gen_synthetic_problem", "objective", "validate_problem",
]
