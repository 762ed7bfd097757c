"""
状态扩展：Dirac 代数约束 ↔ 拉格朗日代数约束

dirac_to_lagrange:
    状态 (x, λ)，扩展结构为 [[J, B], [−Bᵀ, 0]] 的图，储能为生成函数
    V(x, e_λ) = H(x)，于是 λ = 0 成为拉格朗日约束，λ̇ = −Bᵀ∇H 重现原约束。

lagrange_to_dirac:
    状态 (x, λ)，扩展结构为 D × {(f_λ, e_λ) | e_λ = 0}，储能为显式 F(x, λ)。
    生成函数 V(x_I, e_J) 先转成标准 Morse 族 F = V(x_I, λ) + λᵀx_J。
"""

import logging

from phdae.errors import NothingToConvert
from phdae.expr import ExprTree, MatrixExpr, tree_sum
from phdae.geometry import (
    DiracStructure,
    ExplicitHamiltonian,
    GeneratingFunction,
    MorseFamily,
    costate_name,
    multiplier_names,
)

from .phsystem import PHSystem, assemble, ensure_morse_rank, extend_box

logger = logging.getLogger(__name__)


def _pad_rows(m: MatrixExpr, extra: int, variables) -> MatrixExpr:
    lifted = m.rebase(variables)
    if extra == 0:
        return lifted
    return MatrixExpr.block([[lifted], [MatrixExpr.zeros(extra, m.cols, variables)]])


def dirac_to_lagrange(sys: PHSystem) -> PHSystem:
    """把 k 个 Dirac 约束换成 λ = 0 形式的拉格朗日约束"""
    if not isinstance(sys.storage, ExplicitHamiltonian):
        raise NothingToConvert("Dirac→Lagrange 转换需要显式哈密顿量储能")
    if sys.k == 0:
        raise NothingToConvert("系统没有 Dirac 代数约束（k = 0）")

    n, k = sys.n, sys.k
    lam = multiplier_names(k, sys.state_names)
    names = list(sys.state_names) + lam
    D = sys.dirac
    J = D.J.rebase(names)
    B = D.B.rebase(names)
    J_e = MatrixExpr.block([
        [J, B],
        [-B.transpose(), MatrixExpr.zeros(k, k, names)],
    ])
    dirac = DiracStructure(
        J_e,
        G_R=_pad_rows(D.G_R, k, names),
        G=_pad_rows(D.G, k, names),
    )
    I = tuple(range(n))
    J_idx = tuple(range(n, n + k))
    chart = GeneratingFunction.chart_names(names, I, J_idx)
    storage = GeneratingFunction(V=sys.storage.H.rebase(chart), I=I, J=J_idx, state_names=tuple(names))
    logger.debug("Dirac→Lagrange: %s → 状态 %s", sys.name, names)
    return assemble(
        dirac,
        storage,
        sys.rbar,
        sample_box=extend_box(sys.sample_box, n, k),
        name=f"{sys.name}_lagrange" if sys.name else "",
    )


def canonical_morse_family(storage: GeneratingFunction, param_names=None) -> MorseFamily:
    """F(x, λ) = V(x_I, λ) + λᵀ x_J"""
    names = tuple(storage.state_names)
    params = tuple(param_names or multiplier_names(len(storage.J), names))
    joint = names + params
    renames = {costate_name(names[j]): params[pos] for pos, j in enumerate(storage.J)}
    V = storage.V.rebase(joint, renames)
    coupling = tree_sum(
        [ExprTree.variable(params[pos], joint) * ExprTree.variable(names[j], joint)
         for pos, j in enumerate(storage.J)],
        joint,
    )
    return MorseFamily(F=V + coupling, k=len(params), state_names=names, param_names=params)


def lagrange_to_dirac(sys: PHSystem) -> PHSystem:
    """把拉格朗日约束换成显式储能 F(x, λ) 上的 Dirac 约束 ∂F/∂λ = 0"""
    storage = sys.storage
    if isinstance(storage, ExplicitHamiltonian):
        raise NothingToConvert("储能已经是显式哈密顿量，没有拉格朗日代数约束")
    if isinstance(storage, GeneratingFunction):
        if not storage.J:
            raise NothingToConvert("生成函数没有共态坐标（J 为空）")
        family = canonical_morse_family(storage)
    else:
        family = storage
    ensure_morse_rank(family, sys.sample_box)

    n, k = sys.n, family.k
    names = list(sys.state_names) + list(family.param_names)
    D = sys.dirac
    zero_nk = MatrixExpr.zeros(n, k, names)
    J_e = MatrixExpr.block([
        [D.J.rebase(names), zero_nk],
        [zero_nk.transpose(), MatrixExpr.zeros(k, k, names)],
    ])
    B_e = MatrixExpr.block([
        [D.B.rebase(names), zero_nk],
        [MatrixExpr.zeros(k, D.k, names), MatrixExpr.identity(k, names)],
    ])
    dirac = DiracStructure(J_e, B_e, _pad_rows(D.G_R, k, names), _pad_rows(D.G, k, names))
    logger.debug("Lagrange→Dirac: %s → 状态 %s", sys.name, names)
    return assemble(
        dirac,
        ExplicitHamiltonian(family.F.rebase(names)),
        sys.rbar,
        sample_box=extend_box(sys.sample_box, n, k),
        name=f"{sys.name}_dirac" if sys.name else "",
    )
