"""Multirate simulation of switched linear circuits.

The package splits a pulsed-excitation circuit solution into a slowly
varying envelope and a periodic ripple, expands the ripple in a periodic
basis (nodal hats or duty-cycle-aware orthonormal polynomials) and
integrates only the slow dynamics with an adaptive implicit Runge-Kutta
method.  A closed-form piecewise-exponential reference provides ground
truth for convergence and efficiency studies.
"""

from .analysis import (
    EfficiencyCase,
    ErrorReport,
    ProjectionResult,
    baseline_timestep,
    convergence_study,
    efficiency_study,
    l2_project,
    projection_residuals,
    relative_l2_error,
    three_level_signal,
)
from .analytic import AnalyticSolution, analytic_solution, sample
from .basis import (
    BasisFamily,
    BasisSet,
    build_fe_nodal,
    build_pwm,
    gram_matrix,
    pwm_intermediates,
    stiffness_matrix,
)
from .circuit import CircuitModel, buck_converter
from .galerkin import (
    GalerkinSystem,
    MultirateSolution,
    apply_initial_condition,
    assemble,
    solve_multirate,
    steady_state,
)
from .linalg import LUFactorization, expm, kron, lu_solve, nonzero_fraction
from .piecewise import PiecewisePolynomial
from .radau import (
    CompositeTrajectory,
    EventGrid,
    SolverConfig,
    SolverStats,
    Trajectory,
    dense_eval,
    integrate,
)

__version__ = "0.1.0"
