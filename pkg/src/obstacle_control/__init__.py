"""Finite element obstacle problems with distributed optimal control of the source.

Dirichlet and Robin boundary conditions on part of the boundary, PSOR and
primal-dual active set solvers, numerical checks of the solution-map
estimates and Robin-to-Dirichlet limit sweeps.
"""

from .assembly import (
    GAMMA1,
    GAMMA2,
    INTERIOR,
    Grid,
    ViProblem,
    assemble,
    build_grid,
    estimate_coercivity,
    export_coo,
    trace_norm,
)
from .control import (
    ControlProblem,
    ControlResult,
    OptimizerConfig,
    check_convexity_gap,
    cost_gradient,
    eval_cost,
    minimize_cost,
    multistart,
)
from .convergence import fit_rate, h_sweep_control, h_sweep_state
from .estimates import (
    ConvexCombo,
    EstimateReport,
    check_continuity,
    check_lemma_h_bounds,
    check_lemma_l3,
    check_mignot_monotony,
    check_monotone_in_g,
    check_sandwich,
    check_theorem1,
    compute_alpha_beta,
    convex_state_pair,
)
from .estimators import ObstacleVI, OptimalControl
from .exceptions import (
    ConfigurationError,
    InfeasibleConstraintError,
    InputError,
    LineSearchError,
    NonConvergenceError,
    ObstacleError,
)
from .suite import run_check_suite
from .tables import SweepTable
from .vi_solver import (
    SolverConfig,
    ViSolution,
    pdas,
    psor,
    solve_dirichlet_vi,
    solve_robin_vi,
    solve_unconstrained,
    solve_vi,
)

__version__ = "0.1.0"
