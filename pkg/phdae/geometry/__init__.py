"""
几何子系统 - 图形式 Dirac 结构与拉格朗日子流形的三种局部表示

使用方式:
    from phdae.geometry import DiracStructure, validate_dirac

    report = validate_dirac(D)
    print(report.format())
"""

from .dirac import DiracBasis, DiracStructure, dirac_sample_basis, validate_dirac
from .lagrangian import (
    InternalEquations,
    MembershipResult,
    ProbeResult,
    lagrange_constraint_probe,
    lagrangian_membership,
    locate_zero_set,
    projection_residual,
    sample_lagrangian_points,
    validate_morse,
)
from .report import SampleCheck, ValidationReport
from .sampling import make_rng, multistart_grid, normalize_box, sample_points
from .storage import (
    ExplicitHamiltonian,
    GeneratingFunction,
    MorseFamily,
    StorageRelation,
    costate_name,
    multiplier_names,
)

__all__ = [
    "DiracStructure",
    "DiracBasis",
    "dirac_sample_basis",
    "validate_dirac",
    "ExplicitHamiltonian",
    "GeneratingFunction",
    "MorseFamily",
    "StorageRelation",
    "costate_name",
    "multiplier_names",
    "lagrangian_membership",
    "lagrange_constraint_probe",
    "validate_morse",
    "locate_zero_set",
    "projection_residual",
    "sample_lagrangian_points",
    "InternalEquations",
    "MembershipResult",
    "ProbeResult",
    "ValidationReport",
    "SampleCheck",
    "sample_points",
    "multistart_grid",
    "normalize_box",
    "make_rng",
]
