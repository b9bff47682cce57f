"""Numerical solver for ``du/dzbar = (A/L) u + (B/L) conj(u) + F`` with isolated singular points."""

from .cauchy import TransformOptions, apply_T, apply_T_star, bilinear_form, build_f, pompeiu
from .coefficients import (CoefficientField, PeriodicProfile, ProblemSpec, SingularPoint,
                           compute_gamma, eval_L, eval_M, verify_condition, weighted_norm_E,
                           weighted_norm_X)
from .errors import (ExpressionError, GeometryError, NonFiniteError, PoleError, SolverError,
                     SpecError, VekuaError)
from .expression import Expression, parse_expression, print_expression
from .fredholm import SolveReport, SolverOptions, kernel_basis, pde_residual, solve_CR, solve_P
from .grid import (Domain, Grid, GridField, holder_estimate, integrate, make_grid,
                   verification_mask, wirtinger_dbar)
from .homogeneous import HomogeneousRequest, HomogeneousResult, build_homogeneous, \
    local_solution, vanishing_order
from .model import ModelSpectrum, find_exponents, model_solution, monodromy
from .reduction import ReductionResult, build_cutoffs, build_w, phat, reduce, unreduce

__version__ = "0.1.0"

__all__ = [
    "TransformOptions", "apply_T", "apply_T_star", "bilinear_form", "build_f", "pompeiu",
    "CoefficientField", "PeriodicProfile", "ProblemSpec", "SingularPoint", "compute_gamma",
    "eval_L", "eval_M", "verify_condition", "weighted_norm_E", "weighted_norm_X",
    "ExpressionError", "GeometryError", "NonFiniteError", "PoleError", "SolverError",
    "SpecError", "VekuaError", "Expression", "parse_expression", "print_expression",
    "SolveReport", "SolverOptions", "kernel_basis", "pde_residual", "solve_CR", "solve_P",
    "Domain", "Grid", "GridField", "holder_estimate", "integrate", "make_grid",
    "verification_mask", "wirtinger_dbar", "HomogeneousRequest", "HomogeneousResult",
    "build_homogeneous", "local_solution", "vanishing_order", "ModelSpectrum",
    "find_exponents", "model_solution", "monodromy", "ReductionResult", "build_cutoffs",
    "build_w", "phat", "reduce", "unreduce",
]
