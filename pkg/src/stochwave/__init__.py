"""Lateral Cauchy reconstruction for a stochastic wave equation.

Forward data come from finite-difference or meshless solves driven by seeded
Brownian paths; the inverse step fits a space-time expansion in wave kernels
and multiquadrics by regularized collocation.
"""

from .geometry import Disk, Interval, LeafCurve, SpaceTimeDomain, UnitSquare
from .inverse import CauchySample, InverseConfig, InverseSolver, solve_inverse
from .linsolve import select_gamma, svd, tikhonov_solve
from .stochastic import NoiseSpec, add_noise, generate_path

__version__ = "0.1.0"

__all__ = [
    "Disk",
    "Interval",
    "LeafCurve",
    "SpaceTimeDomain",
    "UnitSquare",
    "CauchySample",
    "InverseConfig",
    "InverseSolver",
    "solve_inverse",
    "select_gamma",
    "svd",
    "tikhonov_solve",
    "NoiseSpec",
    "add_noise",
    "generate_path",
]
