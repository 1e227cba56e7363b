"""Spectral-Galerkin simulation and diagnostics for the inertial Cahn-Hilliard equation

    eps u_tt + u_t + A(A u + f(u)) = g   on (0, pi)^d,  d in {1, 2},

with Dirichlet conditions ``u = Delta u = 0``.
"""

from .diagnostics import (
    dissipation_check,
    energy_equality_residual,
    energy_increase,
    energy_report,
    graph_norm,
    hausdorff_semidistance,
    second_identity_residual,
)
from .dynamics import IntegratorConfig, State, TrajectoryRecord, integrate, integrate_auxiliary, integrate_parabolic
from .equilibria import (
    CutoffProfile,
    Equilibrium,
    distance_to_equilibria,
    enumerate_equilibria,
    glue_quasi_trajectory,
    select_L,
    solve_equilibrium,
)
from .model import AssumptionViolation, Nonlinearity, ProblemConfig, energy, validate_assumptions
from .regularization import backward_bound_check, eps_comparison, split_trajectory
from .spectral import DomainSpec, SpectralField, from_grid, to_grid

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "CutoffProfile",
    "DomainSpec",
    "Equilibrium",
    "IntegratorConfig",
    "Nonlinearity",
    "ProblemConfig",
    "SpectralField",
    "State",
    "TrajectoryRecord",
    "backward_bound_check",
    "dissipation_check",
    "distance_to_equilibria",
    "energy",
    "energy_equality_residual",
    "energy_increase",
    "energy_report",
    "enumerate_equilibria",
    "eps_comparison",
    "from_grid",
    "glue_quasi_trajectory",
    "graph_norm",
    "hausdorff_semidistance",
    "integrate",
    "integrate_auxiliary",
    "integrate_parabolic",
    "second_identity_residual",
    "select_L",
    "solve_equilibrium",
    "split_trajectory",
    "to_grid",
    "validate_assumptions",
]
