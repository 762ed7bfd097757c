"""
数值 Legendre 变换

    P*(e) = eᵀx − P(x),  其中 x 由 e = ∇P(x) 解出

Hessian 奇异（x ↦ ∇P(x) 局部不是单射）时抛 NonConvexPoint，
与单纯的 Newton 不收敛区分开。
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from phdae.errors import DimensionMismatch, NonConvexPoint, SingularMatrix
from phdae.expr import ExprTree
from phdae.numerics import NewtonConfig, inf_norm, min_singular_value, newton_solve, solve_linear

logger = logging.getLogger(__name__)

# Hessian 最小奇异值低于此值视为非凸点
HESSIAN_SINGULAR = 1e-12


@dataclass
class LegendreResult:
    """变换值、方程 e = ∇P(x) 的解、Newton 迭代次数"""
    value: float
    point: np.ndarray
    iterations: int


def _hessian_block(P: ExprTree, x: np.ndarray, rows: Sequence[int]) -> np.ndarray:
    H = P.hessian(x)
    block = H[np.ix_(rows, rows)]
    if min_singular_value(block) < HESSIAN_SINGULAR:
        raise NonConvexPoint(f"Hessian 在 {x.tolist()} 处奇异，∇P 局部不可逆", point=x.copy())
    return block


def _solve_gradient_equation(
    P: ExprTree,
    target: np.ndarray,
    unknowns: list[int],
    base: np.ndarray,
    guess: np.ndarray,
    cfg: Optional[NewtonConfig],
):
    """解 ∂P/∂x_U (x) = target，x 的其余分量固定为 base"""
    grads = [P.derivative(i) for i in unknowns]

    def embed(u: np.ndarray) -> np.ndarray:
        x = base.copy()
        x[unknowns] = u
        return x

    def residual(u: np.ndarray) -> np.ndarray:
        x = embed(u)
        return np.array([g.evaluate(x) for g in grads]) - target

    def jacobian(u: np.ndarray) -> np.ndarray:
        return _hessian_block(P, embed(u), unknowns)

    try:
        result = newton_solve(residual, jacobian, guess, cfg)
    except SingularMatrix as exc:
        raise NonConvexPoint(f"Hessian 接近奇异: {exc}", point=embed(np.asarray(guess, dtype=float))) from exc
    solution = embed(result.x)
    _hessian_block(P, solution, unknowns)
    return solution, result.iterations


def legendre(P: ExprTree, e, x_guess=None, cfg: Optional[NewtonConfig] = None) -> LegendreResult:
    """P*(e)；x_guess 缺省为零向量"""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if e.size != P.size:
        raise DimensionMismatch(f"e 的长度 {e.size} 与 P 的变量数 {P.size} 不一致")
    guess = np.zeros(P.size) if x_guess is None else np.atleast_1d(np.asarray(x_guess, dtype=float))
    x, iterations = _solve_gradient_equation(P, e, list(range(P.size)), np.zeros(P.size), guess, cfg)
    value = float(e @ x) - P.evaluate(x)
    logger.debug("Legendre: e=%s → x*=%s（%d 次迭代）", e.tolist(), x.tolist(), iterations)
    return LegendreResult(value=value, point=x, iterations=iterations)


def legendre_inverse_check(P: ExprTree, x, cfg: Optional[NewtonConfig] = None) -> float:
    """‖x* − x‖∞，x* 是 legendre(P, ∇P(x), x) 的解点（即 ∇P*(∇P(x))）"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    result = legendre(P, P.gradient(x), x, cfg)
    return inf_norm(result.point - x)


def partial_legendre(
    P: ExprTree,
    J_indices: Sequence[int],
    x_I,
    e_J,
    x_J_guess=None,
    cfg: Optional[NewtonConfig] = None,
) -> LegendreResult:
    """
    对 x_J 做部分 Legendre 变换

    解 e_J = ∂P/∂x_J(x_I, x_J)，返回 e_Jᵀx_J* − P(x_I, x_J*)，point = x_J*。
    J_indices 是 P 变量表中的 0 起下标，其余下标按顺序构成 I。
    """
    J = list(J_indices)
    I = [i for i in range(P.size) if i not in J]
    x_I = np.atleast_1d(np.asarray(x_I, dtype=float))
    e_J = np.atleast_1d(np.asarray(e_J, dtype=float))
    if x_I.size != len(I) or e_J.size != len(J):
        raise DimensionMismatch(f"x_I / e_J 的长度应为 {len(I)} / {len(J)}")
    base = np.zeros(P.size)
    base[I] = x_I
    guess = np.zeros(len(J)) if x_J_guess is None else np.atleast_1d(np.asarray(x_J_guess, dtype=float))
    x, iterations = _solve_gradient_equation(P, e_J, J, base, guess, cfg)
    x_J = x[J]
    value = float(e_J @ x_J) - P.evaluate(x)
    return LegendreResult(value=value, point=x_J, iterations=iterations)


def legendre_bidual(P: ExprTree, x, e_guess=None, cfg: Optional[NewtonConfig] = None) -> LegendreResult:
    """
    P**(x) = eᵀx − P*(e)，e 由 ∇P*(e) = x 解出

    外层对 e 做 Newton，∇P*(e) 即内层解点 x*(e)，其 Jacobian 为 ∇²P(x*)⁻¹。
    内层每次从上一次的解点热启动。返回的 point 是对偶变量 e。
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cfg = cfg or NewtonConfig.from_settings()
    inner_guess = [np.zeros(P.size)]
    e0 = P.gradient(inner_guess[0]) if e_guess is None else np.atleast_1d(np.asarray(e_guess, dtype=float))

    def inner(e: np.ndarray) -> LegendreResult:
        result = legendre(P, e, inner_guess[0], cfg)
        inner_guess[0] = result.point
        return result

    def residual(e: np.ndarray) -> np.ndarray:
        return inner(e).point - x

    def jacobian(e: np.ndarray) -> np.ndarray:
        point = inner(e).point
        H = P.hessian(point)
        return solve_linear(H, np.eye(P.size))

    result = newton_solve(residual, jacobian, e0, cfg)
    e = result.x
    value = float(e @ x) - inner(e).value
    return LegendreResult(value=value, point=e, iterations=result.iterations)
