"""
P̃ 与有效哈密顿量

    P̃(x) = xᵀ∇P(x) − P(x)                (满足 ∇P̃ = ∇²P · x)
    H̃(x_I, e_J) = V − e_Jᵀ ∂V/∂e_J
"""

import numpy as np

from phdae.expr import ExprTree, tree_sum
from phdae.numerics import inf_norm


def tilde_tree(P: ExprTree) -> ExprTree:
    """P̃ 的表达式树"""
    terms = [
        ExprTree.variable(name, P.variables) * P.derivative(i)
        for i, name in enumerate(P.variables)
    ]
    return tree_sum(terms, P.variables) - P


def tilde(P: ExprTree, x) -> float:
    """P̃(x) = xᵀ∇P(x) − P(x)，不需要 Newton"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(x @ P.gradient(x)) - P.evaluate(x)


def tilde_grad_check(P: ExprTree, x) -> float:
    """‖∇P̃(x) − ∇²P(x)·x‖∞，∇P̃ 由 P̃ 的树结构求导得到"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return inf_norm(tilde_tree(P).gradient(x) - P.hessian(x) @ x)


def effective_hamiltonian_tree(V: ExprTree, costate_count: int) -> ExprTree:
    """H̃ 的表达式树；V 变量表的最后 costate_count 个变量是 e_J"""
    first = V.size - costate_count
    terms = [
        ExprTree.variable(V.variables[j], V.variables) * V.derivative(j)
        for j in range(first, V.size)
    ]
    return V - tree_sum(terms, V.variables)


def effective_hamiltonian(V: ExprTree, x_I, e_J) -> float:
    """H̃(x_I, e_J)"""
    x_I = np.atleast_1d(np.asarray(x_I, dtype=float))
    e_J = np.atleast_1d(np.asarray(e_J, dtype=float))
    return effective_hamiltonian_tree(V, e_J.size).evaluate(np.concatenate([x_I, e_J]))
