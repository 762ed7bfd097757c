"""
阻尼 Newton 系列求解器

- newton_solve: 方阵 Jacobian，步长减半，只接受使残差无穷范数严格下降的步
- gauss_newton_solve: 超定残差（最小二乘步）
- project_onto_constraints: min ‖y − anchor‖² s.t. g(y) = 0 的 SQP 迭代
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from phdae.errors import DomainError, NoConvergence, SingularJacobian, SingularMatrix

from .config import NewtonConfig
from .linalg import inf_norm, least_squares, solve_linear

logger = logging.getLogger(__name__)

VectorFn = Callable[[np.ndarray], np.ndarray]
MatrixFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class NewtonResult:
    """求解结果"""
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool = True


def _safe_residual(residual: VectorFn, x: np.ndarray) -> Optional[np.ndarray]:
    """试探点的残差；越出定义域或非有限时返回 None（视为拒绝）"""
    try:
        r = np.asarray(residual(x), dtype=float).ravel()
    except DomainError:
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def _damped_step(
    residual: VectorFn,
    x: np.ndarray,
    dx: np.ndarray,
    current: float,
    cfg: NewtonConfig,
    norm: Callable[[np.ndarray], float] = inf_norm,
) -> Optional[tuple[np.ndarray, np.ndarray, float]]:
    """步长减半直到残差范数严格下降；全部失败返回 None"""
    step = 1.0
    for halving in range(cfg.max_halvings + 1):
        trial = x + step * dx
        r = _safe_residual(residual, trial)
        if r is not None:
            value = norm(r)
            if value < current or inf_norm(r) <= cfg.tolerance:
                if halving:
                    logger.debug("接受阻尼步长 %.3g（减半 %d 次）", step, halving)
                return trial, r, value
        step *= 0.5
    return None


def newton_solve(
    residual: VectorFn,
    jacobian: MatrixFn,
    x0,
    cfg: Optional[NewtonConfig] = None,
) -> NewtonResult:
    """
    阻尼 Newton 求根

    Raises:
        SingularJacobian: 迭代点处 Jacobian 奇异（既是 SingularMatrix 也是 NoConvergence）
        NoConvergence: 迭代次数用完或步长减半失败
    """
    cfg = cfg or NewtonConfig.from_settings()
    x = np.array(x0, dtype=float).ravel()
    r = np.asarray(residual(x), dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise NoConvergence(f"初始点 {x} 的残差不是有限值")
    norm = inf_norm(r)
    iterations = 0

    while norm > cfg.tolerance:
        if iterations >= cfg.max_iterations:
            raise NoConvergence(
                f"Newton 在 {cfg.max_iterations} 次迭代内未收敛（残差 {norm:.3e}）"
            )
        try:
            dx = solve_linear(jacobian(x), -r)
        except SingularMatrix as exc:
            raise SingularJacobian(f"Jacobian 在 {x} 处奇异: {exc}") from exc
        accepted = _damped_step(residual, x, dx, norm, cfg)
        if accepted is None:
            raise NoConvergence(f"步长减半 {cfg.max_halvings} 次后残差仍未下降（残差 {norm:.3e}）")
        x, r, norm = accepted
        iterations += 1
        logger.debug("Newton 第 %d 次迭代，残差 %.3e", iterations, norm)

    return NewtonResult(x=x, iterations=iterations, residual_norm=norm)


def gauss_newton_solve(
    residual: VectorFn,
    jacobian: MatrixFn,
    x0,
    cfg: Optional[NewtonConfig] = None,
    raise_on_failure: bool = True,
) -> NewtonResult:
    """
    超定系统的阻尼 Gauss-Newton

    残差在容差内即收敛。raise_on_failure=False 时失败也返回当前最好的点
    （converged=False），供多起点调用方比较残差。
    """
    cfg = cfg or NewtonConfig.from_settings()
    x = np.array(x0, dtype=float).ravel()
    r = np.asarray(residual(x), dtype=float).ravel()
    l2 = lambda v: float(np.linalg.norm(v))
    merit = l2(r)
    iterations = 0

    def fail(message: str) -> NewtonResult:
        if raise_on_failure:
            raise NoConvergence(message)
        return NewtonResult(x=x, iterations=iterations, residual_norm=inf_norm(r), converged=False)

    while inf_norm(r) > cfg.tolerance:
        if iterations >= cfg.max_iterations:
            return fail(f"Gauss-Newton 在 {cfg.max_iterations} 次迭代内未收敛")
        dx = least_squares(jacobian(x), -r)
        if inf_norm(dx) <= 1e-15 * (1.0 + inf_norm(x)):
            return fail(f"Gauss-Newton 停滞（残差 {inf_norm(r):.3e}）")
        accepted = _damped_step(residual, x, dx, merit, cfg, norm=l2)
        if accepted is None:
            return fail(f"Gauss-Newton 步长减半失败（残差 {inf_norm(r):.3e}）")
        x, r, merit = accepted
        iterations += 1

    return NewtonResult(x=x, iterations=iterations, residual_norm=inf_norm(r))


def project_onto_constraints(
    constraint: VectorFn,
    jacobian: MatrixFn,
    anchor,
    cfg: Optional[NewtonConfig] = None,
    x0=None,
    polish: bool = False,
) -> NewtonResult:
    """
    把 anchor 投影到 {y | g(y) = 0}

    每步解 (G Gᵀ) μ = g + G (anchor − y)，取 y ← anchor − Gᵀ μ，
    不动点满足 y − anchor + G(y)ᵀ μ = 0 与 g(y) = 0。
    G Gᵀ 奇异（恒为零的约束行、重复约束）时取最小范数 μ。
    polish=True 时达到容差后继续迭代，只要 ‖g‖ 还在下降
    （用于把点精确地落在零集上，例如检查秩条件）。
    """
    cfg = cfg or NewtonConfig.from_settings()
    anchor = np.array(anchor, dtype=float).ravel()
    y = anchor.copy() if x0 is None else np.array(x0, dtype=float).ravel()
    g = np.asarray(constraint(y), dtype=float).ravel()
    if g.size == 0:
        return NewtonResult(x=y, iterations=0, residual_norm=0.0)
    norm = inf_norm(g)
    budget = cfg.max_iterations * (2 if polish else 1)
    steps = 0

    for _ in range(budget):
        feasible = norm <= cfg.tolerance
        if feasible and (not polish or norm == 0.0):
            break
        G = np.atleast_2d(np.asarray(jacobian(y), dtype=float))
        rhs = g + G @ (anchor - y)
        try:
            mu = solve_linear(G @ G.T, rhs)
        except SingularMatrix:
            if feasible:
                break
            # 恒为零或线性相关的约束行：取最小范数乘子
            logger.debug("约束 Jacobian 在 %s 处行不满秩，改用最小范数乘子", y.tolist())
            mu = least_squares(G @ G.T, rhs)
        target = anchor - G.T @ mu
        if feasible:
            r = _safe_residual(constraint, target)
            if r is None or inf_norm(r) >= norm:
                break
            y, g, norm = target, r, inf_norm(r)
            steps += 1
            continue
        accepted = _damped_step(constraint, y, target - y, norm, cfg)
        if accepted is None:
            raise NoConvergence(f"约束投影步长减半失败（残差 {norm:.3e}）")
        y, g, norm = accepted
        steps += 1
        logger.debug("约束投影第 %d 次迭代，残差 %.3e", steps, norm)
    else:
        if norm > cfg.tolerance:
            raise NoConvergence(f"约束投影在 {budget} 次迭代内未收敛（残差 {norm:.3e}）")

    return NewtonResult(x=y, iterations=steps, residual_norm=norm)
