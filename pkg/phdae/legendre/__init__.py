"""
Legendre 变换子系统

    from phdae.legendre import legendre, tilde

    legendre(parse("x^2", ["x"]), [2.0]).value   # 1.0
"""

from .tilde import effective_hamiltonian, effective_hamiltonian_tree, tilde, tilde_grad_check, tilde_tree
from .transform import (
    LegendreResult,
    legendre,
    legendre_bidual,
    legendre_inverse_check,
    partial_legendre,
)

__all__ = [
    "LegendreResult",
    "legendre",
    "legendre_inverse_check",
    "legendre_bidual",
    "partial_legendre",
    "tilde",
    "tilde_tree",
    "tilde_grad_check",
    "effective_hamiltonian",
    "effective_hamiltonian_tree",
]
