"""logcave: numerical verification lab for log-concavity estimates of
principal Dirichlet eigenfunctions on constant- and variable-curvature
surfaces."""

__version__ = "0.1.0"

from .geometry import (
    CurvatureBudget,
    DomainSpec,
    GeometryError,
    MetricChart,
    boundary_geometry,
    convexity_check,
    curvature_budget,
    disk,
    ellipse,
    hyperbolic_ball,
    make_chart,
    radial,
    rectangle,
    spherical_cap,
)
from .eigensolver import (
    AssemblyError,
    ConvergenceError,
    EigenSolution,
    assemble_operator,
    convergence_study,
    principal_eigenpair,
    solve_geometry,
)
from .calculus import (
    DerivedFields,
    HessianField,
    SafeBandError,
    derived_fields,
    hessian_g,
    laplacian_g,
    solution_fields,
    worst_direction,
)
from .barriers import (
    BarrierConstants,
    HypothesisError,
    barrier_field,
    boundary_alpha,
    concavity_regions,
    interior_alpha,
    interior_d,
    preset_constants,
)
from .verifier import (
    VerificationReport,
    barrier_operator_eval,
    boundary_probe,
    check_barrier_criteria,
    check_barrier_inequality,
    check_gradient_bound,
    check_half_log_concavity,
    check_log_concavity,
    check_strict_region,
    continuity_sweep,
)
from .oracles import AnalyticSolution, OracleError, analytic_solution, bessel_j, oracle_error
