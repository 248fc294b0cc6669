"""Finite-difference solver for degenerate noncoercive elliptic problems.

Solves ``-div(a grad u / (1 + b|u|)**theta) + u = f - div Phi(u)`` with homogeneous
Dirichlet data on a rectangle, and checks the discrete solutions against
a-priori estimates and weak/entropy formulations.
"""

from .config import Scenario, load_config, read_config, scenario_from_dict, spec_from_expressions
from .core import Grid, GridFunction, ProblemSpec, coefficient, phi_eval, psi, truncate
from .discretization import SparseSystem, assemble, nonlinear_residual, write_matrix_market
from .errors import (
    AssumptionViolation,
    ConfigParseError,
    DimensionMismatch,
    GrowthAssumptionViolated,
    InsufficientLevels,
    InvalidArgument,
    InvalidTestFunction,
    LinearSolverFailure,
    ManufacturedUnsupported,
    NoncoerciveError,
    NonlinearNonconvergence,
)
from .estimates import (
    distributional_residual,
    entropy_residual,
    levelset_measure,
    norms,
    residual_report,
    test_function_library,
    verify_apriori,
)
from .expressions import Expression
from .mms import convergence_study, manufactured_rhs, manufactured_spec
from .runner import run_mms, run_scenario, run_sequence
from .scenarios import CORPUS, PRESETS, preset
from .solver import SolverConfig, SolveResult, approximation_sequence, linear_solve, picard_solve

__version__ = "0.1.0"
