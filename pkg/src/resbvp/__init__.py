"""Nonlinear scalar multipoint boundary value problems at resonance.

A small numpy/scipy library that analyzes the linear structure of
difference-equation boundary value problems in companion form, certifies
solvability conditions for nonlinear perturbations on a band, solves the
reduced system constructively, and cross-checks everything against a
brute-force Newton oracle.
"""

from .errors import (
    BisectionStallError,
    BoundarySignViolationError,
    DegenerateSignDataError,
    ExprDomainError,
    ExprSyntaxError,
    InputError,
    KernelTooLargeError,
    NoConvergenceError,
    NotApplicableError,
    NotInImageError,
    NotResonantError,
    NumericalError,
    ProblemFormatError,
    ResbvpError,
    SingularStepMatrixError,
)
from .expressions import Expr, bound_on_box, lipschitz_estimate, parse, to_text
from .problem import (
    GridFunction,
    ProblemSpec,
    ScalarTrajectory,
    boundary_map_value,
    boundary_space_projection,
    companion_matrix,
    grid_to_scalar,
    load_problem,
    loads_problem,
    problem_to_json,
    save_problem,
    scalar_boundary_values,
    scalar_to_grid,
    to_companion,
)
from .linear import (
    LinearAnalysis,
    analysis_report,
    analyze,
    apply_operator,
    image_membership,
    norm_bound,
    project_cokernel,
    project_kernel,
    right_inverse,
)
from .conditions import (
    AutoSearchResult,
    Certificate,
    ConditionReport,
    IndexSigns,
    auto_certificate,
    certify_landesman_lazer,
    certify_main,
    certify_same_sign,
    certify_small_linear,
    certify_sublinear,
    report_to_dict,
    sign_sets,
    sturm_liouville_builder,
)
from .solver import (
    AuxSolution,
    BifurcationProblem,
    SolveResult,
    auxiliary_fixed_point,
    bifurcation_value,
    make_bifurcation_problem,
    reduction_residuals,
    solve,
)
from .oracle import (
    FullSystem,
    MultistartResult,
    NewtonRun,
    build_full_system,
    linear_nullity,
    multistart,
    newton_solve,
    random_resonant_spec,
)
from .reference import (
    reference_certified_problem,
    reference_problem,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
