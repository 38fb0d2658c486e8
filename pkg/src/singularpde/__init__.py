"""Mild solutions of parabolic PDEs with distributional drift coefficients on the torus.

A spectral Picard solver for the mild formulation sits on top of
Littlewood-Paley diagnostics; a Monte Carlo sampler builds the associated
virtual BSDE solution from it.
"""
from __future__ import annotations

from .bsde import (
    BackwardProblem,
    backward_problem,
    feynman_kac_check,
    martingale_test,
    simulate_paths,
    virtual_solution,
)
from .estimators import LittlewoodPaleyTransform, MildSolver, VirtualBSDE
from .mildsolver import (
    MildSolution,
    NonConvergence,
    NormExplosion,
    ParameterError,
    SolverParams,
    TimeField,
    apriori_bound,
    blow_up_scan,
    check_parameters,
    estimate_regime_constant,
    picard_solve,
    select_rho_T,
    small_data_radius,
)
from .nonlinearity import Nonlinearity, from_expression, quadratic, sine, softabs
from .oracle import cole_hopf, compare, crank_nicolson
from .paraproduct import bony_decompose, product
from .roughfield import RoughCoefficient, constant_coefficient, generate_rough, smooth_coefficient
from .spectral import Grid, SpectralField, besov_norm, dyadic_decompose, heat_propagate

__version__ = "0.1.0"

__all__ = [
    "BackwardProblem", "Grid", "LittlewoodPaleyTransform", "MildSolution", "MildSolver", "NonConvergence",
    "Nonlinearity", "NormExplosion", "ParameterError", "RoughCoefficient", "SolverParams", "SpectralField",
    "TimeField", "VirtualBSDE", "apriori_bound", "backward_problem", "besov_norm", "blow_up_scan",
    "bony_decompose", "check_parameters", "cole_hopf", "compare", "constant_coefficient", "crank_nicolson",
    "dyadic_decompose", "estimate_regime_constant", "feynman_kac_check", "from_expression", "generate_rough",
    "heat_propagate", "martingale_test", "picard_solve", "product", "quadratic", "select_rho_T", "simulate_paths",
    "sine", "small_data_radius", "smooth_coefficient", "softabs", "virtual_solution",
]
