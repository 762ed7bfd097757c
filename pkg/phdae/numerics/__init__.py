"""数值内核 - 稠密线性求解、阻尼 Newton、有限差分基准"""

from .config import NewtonConfig
from .finite_diff import finite_diff_grad, finite_diff_jacobian
from .linalg import (
    inf_norm,
    least_squares,
    matrix_rank,
    min_singular_value,
    null_space_basis,
    singular_values,
    solve_linear,
)
from .newton import NewtonResult, gauss_newton_solve, newton_solve, project_onto_constraints

__all__ = [
    "NewtonConfig",
    "NewtonResult",
    "solve_linear",
    "least_squares",
    "newton_solve",
    "gauss_newton_solve",
    "project_onto_constraints",
    "finite_diff_grad",
    "finite_diff_jacobian",
    "inf_norm",
    "matrix_rank",
    "min_singular_value",
    "null_space_basis",
    "singular_values",
]
