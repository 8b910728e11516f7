"""Picard solver, contraction certificates and Gronwall-bound checks for
impulsive Volterra-Fredholm integrodifferential equations."""

from .certificates import (ContractionCertificate, DependenceInputs, certify, contraction_constant,
                           eps_dependence_bound, gronwall_dependence_bound, optimize_gamma,
                           po_dependence_bound)
from .core import (Bielecki, Chebyshev, Grid, ImpulseSchedule, Trajectory, make_grid, norm,
                   traj_distance)
from .dsl import load_problem, parse_expression, parse_problem, problem_to_toml, to_source
from .gronwall import (GronwallInstance, bound_mixed, bound_mixed_corrected, bound_volterra_double,
                       bound_volterra_impulse, equality_oracle, load_gronwall, verify_bounds)
from .semigroup import estimate_semigroup_bound, matrix_exponential
from .solver import MildOperator, picard_solve, problem_grid, residual_report

__version__ = "0.1.0"

__all__ = [
    "ContractionCertificate", "DependenceInputs", "certify", "contraction_constant",
    "eps_dependence_bound", "gronwall_dependence_bound", "optimize_gamma", "po_dependence_bound",
    "Bielecki", "Chebyshev", "Grid", "ImpulseSchedule", "Trajectory", "make_grid", "norm",
    "traj_distance", "load_problem", "parse_expression", "parse_problem", "problem_to_toml",
    "to_source", "GronwallInstance", "bound_mixed", "bound_mixed_corrected",
    "bound_volterra_double", "bound_volterra_impulse", "equality_oracle", "load_gronwall",
    "verify_bounds", "estimate_semigroup_bound", "matrix_exponential", "MildOperator",
    "picard_solve", "problem_grid", "residual_report", "__version__",
]
