"""
最优控制问题的端口哈密顿表述

    K(q, p, u) = pᵀ f(q, u) + L(q, u)

显式形式: 状态 (q, p, u)，典范辛图 × {e_u = 0}，储能 K，Dirac 约束 ∂K/∂u = 0
隐式形式: 状态 (q, p)，典范辛图，储能为 Morse 族 K（参数 u）
"""

from typing import Sequence

import numpy as np

from phdae.errors import DimensionMismatch
from phdae.expr import ExprTree, MatrixExpr, tree_sum
from phdae.geometry import DiracStructure, ExplicitHamiltonian, MorseFamily

from .phsystem import PHSystem, assemble


def costate_names(q_names: Sequence[str], taken: Sequence[str]) -> list[str]:
    """q → p，q1 → p1，其余 x → p_x"""
    result = []
    used = set(taken)
    for name in q_names:
        candidate = "p" + name[1:] if name.startswith("q") else f"p_{name}"
        while candidate in used:
            candidate += "_"
        used.add(candidate)
        result.append(candidate)
    return result


def _canonical_structure(n: int, extra: int, variables) -> MatrixExpr:
    I = MatrixExpr.identity(n, variables)
    Z = lambda r, c: MatrixExpr.zeros(r, c, variables)
    rows = [
        [Z(n, n), I, Z(n, extra)],
        [-I, Z(n, n), Z(n, extra)],
    ]
    if extra:
        rows.append([Z(extra, n), Z(extra, n), Z(extra, extra)])
    return MatrixExpr.block([[b for b in row if b.cols] for row in rows])


def build_optimal_control(
    f: MatrixExpr,
    L: ExprTree,
    q_names: Sequence[str],
    u_names: Sequence[str],
    name: str = "optimal_control",
    sample_box=None,
) -> tuple[PHSystem, PHSystem]:
    """
    返回 (显式形式, 隐式形式)

    f 是 (q, u) 上的 n×1 MatrixExpr，L 是 (q, u) 上的标量表达式。
    """
    q_names, u_names = list(q_names), list(u_names)
    n, m = len(q_names), len(u_names)
    base = q_names + u_names
    if f.shape != (n, 1):
        raise DimensionMismatch(f"f 应为 {n}×1，得到 {f.shape}")
    if tuple(f.variables) != tuple(base) or tuple(L.variables) != tuple(base):
        raise DimensionMismatch(f"f 与 L 必须定义在 {base} 上")

    p_names = costate_names(q_names, base)
    names = q_names + p_names + u_names
    K = tree_sum(
        [ExprTree.variable(p, names) * f.entry(i, 0).rebase(names) for i, p in enumerate(p_names)],
        names,
    ) + L.rebase(names)

    J = _canonical_structure(n, m, names)
    B = MatrixExpr.block([
        [MatrixExpr.zeros(2 * n, m, names)],
        [MatrixExpr.identity(m, names)],
    ])
    explicit = assemble(
        DiracStructure(J, B),
        ExplicitHamiltonian(K),
        sample_box=sample_box,
        name=f"{name}_explicit",
    )

    state = q_names + p_names
    implicit_J = _canonical_structure(n, 0, state)
    family = MorseFamily(F=K, k=m, state_names=tuple(state), param_names=tuple(u_names))
    implicit = assemble(
        DiracStructure(implicit_J),
        family,
        sample_box=None if sample_box is None else _state_box(sample_box, 2 * n),
        name=f"{name}_implicit",
    )
    return explicit, implicit


def _state_box(box, size: int):
    arr = np.asarray(box, dtype=float)
    return [tuple(row) for row in arr[:size]] if arr.ndim == 2 else tuple(arr)
