"""
系统子系统 - 组装、约束分类、约束类型转换

使用方式:
    from phdae.system import assemble, extract_constraints, dirac_to_lagrange

    sys = assemble(dirac, storage)
    report = extract_constraints(sys)
    extended = dirac_to_lagrange(sys)
"""

from .constraints import (
    DIRAC,
    LAGRANGE,
    AlgebraicConstraint,
    ConstraintReport,
    ProbeSummary,
    extract_constraints,
    stationary_rows,
)
from .conversion import canonical_morse_family, dirac_to_lagrange, lagrange_to_dirac
from .optimal_control import build_optimal_control
from .phsystem import ISOForm, PHSystem, assemble, ensure_morse_rank, is_input_state_output

__all__ = [
    "PHSystem",
    "ISOForm",
    "assemble",
    "ensure_morse_rank",
    "is_input_state_output",
    "extract_constraints",
    "stationary_rows",
    "ConstraintReport",
    "AlgebraicConstraint",
    "ProbeSummary",
    "DIRAC",
    "LAGRANGE",
    "dirac_to_lagrange",
    "lagrange_to_dirac",
    "canonical_morse_family",
    "build_optimal_control",
]
