"""Constructive solver for the selection free boundary problem

    rho_t = 1/2 rho_xx + rho  on  x > L_t,   rho(L_t, t) = 0,
    rho_x(L_t, t) = 2,  int_{L_t}^inf rho = 1,

with a cross-check against the N-particle branching Brownian motion.
"""

from .density import (
    TravelingWave,
    boundary_slope,
    boundary_trace,
    make_initial_datum,
    mass,
    reconstruct_rho,
    snapshot,
    stefan_velocity_check,
    traveling_wave,
    v_mass,
    wave_datum,
)
from .errors import (
    BudgetError,
    ConvergenceError,
    CurveClassError,
    DomainError,
    FBPError,
    SingularStepError,
)
from .fixed_point import FixedPointReport, SolverConfig, apply_K, lipschitz_budget, solve_fbp
from .halfline import BoundaryCurve, FieldSolution, InitialDatum, evaluate_v, evaluate_v_greens, solve_field
from .kernels import heat_kernel, heat_kernel_dx
from .particle import compare_to_pde, simulate
from .volterra import GridFunction, SingularKernel, TimeGrid, picard_solve, solve_weakly_singular

__version__ = "0.1.0"
