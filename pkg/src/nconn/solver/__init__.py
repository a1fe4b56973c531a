"""Construction of exact ansatz solutions from free data and sources."""
from .bundle import (
    FUNCTIONS, PROVENANCE_TAGS, SolutionBundle, SolveRequest, assemble, construct,
)
from .hsector import (
    ConformalSolution, HSectorResidual, RelaxationError, h_sector_residual_expr,
    solve_conformal, solve_h_sector, verify_h_sector,
)
from .offdiag import (
    InconsistencyError, NSolution, QuadratureError, QuadratureTable, WSolution,
    closed_form_antiderivative, n_equation_residual, n_kernel, quadrature,
    quadrature_residual, solve_n, solve_w,
)
from .rk import StepSizeUnderflow, Trajectory, integrate
from .vsector import (
    PreconditionError, RayError, RayTable, VSectorResult, integrate_h5, solve_v_sector,
    v_equation_rhs, vacuum_h4,
)

__all__ = [
    "FUNCTIONS", "PROVENANCE_TAGS", "SolutionBundle", "SolveRequest", "assemble", "construct",
    "ConformalSolution", "HSectorResidual", "RelaxationError", "h_sector_residual_expr",
    "solve_conformal", "solve_h_sector", "verify_h_sector", "InconsistencyError", "NSolution",
    "QuadratureError", "QuadratureTable", "WSolution", "closed_form_antiderivative",
    "n_equation_residual", "n_kernel", "quadrature", "quadrature_residual", "solve_n",
    "solve_w", "StepSizeUnderflow", "Trajectory", "integrate", "PreconditionError",
    "RayError", "RayTable", "VSectorResult", "integrate_h5", "solve_v_sector",
    "v_equation_rhs", "vacuum_h4",
]
