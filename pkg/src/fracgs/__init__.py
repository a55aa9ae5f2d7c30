"""Normalized ground states of fractional nonlinear Schrodinger systems.

Spectral discretization on a periodic box, a normalized gradient flow for
mass-constrained energy minimization, sampled checks of the structural
hypotheses on the nonlinearity, and concentration-compactness diagnostics.
"""

from .diagnostics import (
    ConcentrationProfile,
    SubadditivityTable,
    classify_sequence,
    concentration_function,
    subadditivity_scan,
)
from .energy import (
    EnergyBreakdown,
    dilation_test,
    el_residual,
    energy,
    gn_quotient,
    l2_gradient,
    lagrange_multipliers,
)
from .hypotheses import check_hypotheses
from .minimizer import MinimizerResult, SolverConfig, ground_state_energy, minimize, project_to_constraint
from .nonlinearity import Coefficient, NonlinearitySpec, Term, asymptotic_spec, eval_dF, eval_F, parse_term
from .spectral import Field, Grid, State, apply_fractional_laplacian, lebesgue_norm, make_grid, sobolev_seminorm_sq

__version__ = "0.1.0"

__all__ = [
    "ConcentrationProfile", "SubadditivityTable", "classify_sequence", "concentration_function",
    "subadditivity_scan", "EnergyBreakdown", "dilation_test", "el_residual", "energy", "gn_quotient",
    "l2_gradient", "lagrange_multipliers", "check_hypotheses", "MinimizerResult", "SolverConfig",
    "ground_state_energy", "minimize", "project_to_constraint", "Coefficient", "NonlinearitySpec", "Term",
    "asymptotic_spec", "eval_dF", "eval_F", "parse_term", "Field", "Grid", "State",
    "apply_fractional_laplacian", "lebesgue_norm", "make_grid", "sobolev_seminorm_sq",
]
