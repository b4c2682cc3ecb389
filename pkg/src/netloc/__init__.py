"""Anchor-free network localization from noisy distance bounds.

The localization problem is reduced to finding the root of the value function
``psi(c0) = min_x max_k f_k(x)/c_k``; each ``psi`` evaluation is a finite
minimax problem solved by log-sum-exp smoothing and Wolfe-line-search descent.
"""
from .errors import (
    ConstraintIndexError,
    DegenerateNetworkError,
    DirectionError,
    GenerationError,
    InvalidNetworkError,
    LocalizationError,
    NoBracketError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
    SolverError,
)
from .harness import GenerationSpec, align, density_sweep, error_metrics, generate_network
from .lagrangian import (
    LagrangianCoefficients,
    lagrangian_value,
    smoothed_gradient,
    smoothed_value,
    smoothing_gap_bound,
)
from .minimax import BoxRegion, MinimaxSolution, SolverConfig, minimize_lagrangian, smoothing_gradient_solve
from .network import Edge, NetworkInstance, constraint_gradient, constraint_value, feasibility_check, network_density
from .rootfind import LocalizationResult, Sign, bracket_root, decide_sign, estimate_psi, find_root, localize

__all__ = [name for name in dir() if not name.startswith("_")]
