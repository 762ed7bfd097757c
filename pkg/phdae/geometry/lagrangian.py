"""
拉格朗日子流形上的数值判定

- lagrangian_membership: (x, e) ∈ L ?
- lagrange_constraint_probe: x ∈ π(L) ?（拉格朗日代数约束）
- validate_morse: Morse 族零集上的秩条件
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phdae.config import current_settings
from phdae.errors import (
    DimensionMismatch,
    DomainError,
    Inconclusive,
    NoZeroSetPointFound,
    NumericsError,
)
from phdae.expr import ExprTree
from phdae.numerics import (
    NewtonConfig,
    gauss_newton_solve,
    inf_norm,
    least_squares,
    min_singular_value,
    newton_solve,
    project_onto_constraints,
)

from .report import SampleCheck, ValidationReport
from .sampling import Box, multistart_grid, sample_points
from .storage import ExplicitHamiltonian, GeneratingFunction, MorseFamily, StorageRelation

logger = logging.getLogger(__name__)

MEMBERSHIP_TOLERANCE = 1e-8


@dataclass
class MembershipResult:
    member: bool
    residual: float
    witness: Optional[np.ndarray] = None


@dataclass
class ProbeResult:
    """feasible=False 只在约束方程关于内部坐标是仿射的时候出现（线性代数判定）"""
    feasible: bool
    witness: Optional[np.ndarray] = None
    affine: bool = False


# =============================================================================
# 内部坐标方程
# =============================================================================


class InternalEquations:
    """
    投影 x ∈ π(L) 对应的方程组 h(u) = 0

    GeneratingFunction: u = e_J，h = x_J + ∂V/∂e_J(x_I, u)
    MorseFamily:        u = λ，  h = ∂F/∂λ(x, u)
    """

    def __init__(self, storage: StorageRelation, x):
        x = np.asarray(x, dtype=float)
        if x.size != storage.n:
            raise DimensionMismatch(f"状态长度 {x.size} 与储能维数 {storage.n} 不一致")
        if isinstance(storage, GeneratingFunction):
            self.tree = storage.V
            fixed = x[list(storage.I)]
            self.offset = x[list(storage.J)]
            self.unknowns = list(storage.costate_indices)
        else:
            self.tree = storage.F
            fixed = x
            self.offset = np.zeros(storage.k)
            self.unknowns = list(range(storage.n, storage.n + storage.k))
        self.fixed = fixed
        self.equations: list[ExprTree] = [self.tree.derivative(j) for j in self.unknowns]

    @property
    def size(self) -> int:
        return len(self.unknowns)

    def point(self, u) -> np.ndarray:
        return np.concatenate([self.fixed, np.asarray(u, dtype=float)])

    def residual(self, u) -> np.ndarray:
        y = self.point(u)
        return self.offset + np.array([h.evaluate(y) for h in self.equations])

    def jacobian(self, u) -> np.ndarray:
        H = self.tree.hessian(self.point(u))
        return H[np.ix_(self.unknowns, self.unknowns)]

    def is_affine(self) -> bool:
        """方程关于 u 的一阶导数与 u 无关（结构判定）"""
        names = [self.tree.variables[j] for j in self.unknowns]
        return not any(
            h.derivative(j).depends_on(name)
            for h in self.equations
            for j in self.unknowns
            for name in names
        )


# =============================================================================
# 成员判定
# =============================================================================


def lagrangian_membership(
    storage: StorageRelation,
    x,
    e,
    tol: float = MEMBERSHIP_TOLERANCE,
    seed: Optional[int] = None,
) -> MembershipResult:
    """(x, e) 是否落在储能关系表示的拉格朗日子流形上"""
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    if x.size != storage.n or e.size != storage.n:
        raise DimensionMismatch(f"(x, e) 的长度应为 {storage.n}")

    if isinstance(storage, ExplicitHamiltonian):
        residual = inf_norm(e - storage.effort(x))
        return MembershipResult(residual <= tol, residual)

    if isinstance(storage, GeneratingFunction):
        z = storage.chart_from_pair(x, e)
        grad = storage.V.gradient(z)
        m = len(storage.I)
        residual = max(
            inf_norm(e[list(storage.I)] - grad[:m]),
            inf_norm(x[list(storage.J)] + grad[m:]),
        )
        return MembershipResult(residual <= tol, residual, witness=z[m:])

    return _morse_membership(storage, x, e, tol, seed)


def _morse_membership(storage: MorseFamily, x, e, tol: float, seed: Optional[int]) -> MembershipResult:
    n, k = storage.n, storage.k

    def residual(lam: np.ndarray) -> np.ndarray:
        y = storage.joint(x, lam)
        return np.concatenate([storage.stationarity(y), storage.effort(y) - e])

    def jacobian(lam: np.ndarray) -> np.ndarray:
        H = storage.F.hessian(storage.joint(x, lam))
        return np.vstack([H[n:, n:], H[:n, n:]])

    cfg = NewtonConfig.from_settings()
    best: Optional[tuple[float, np.ndarray]] = None
    for start in multistart_grid(k, seed):
        try:
            result = gauss_newton_solve(residual, jacobian, start, cfg, raise_on_failure=False)
        except (DomainError, NumericsError):
            continue
        if best is None or result.residual_norm < best[0]:
            best = (result.residual_norm, result.x)
        if result.converged and result.residual_norm <= tol:
            break
    if best is None:
        raise DomainError(f"Morse 族在 x = {x.tolist()} 附近的所有起点都无定义")
    return MembershipResult(best[0] <= tol, best[0], witness=best[1])


# =============================================================================
# 拉格朗日代数约束探测
# =============================================================================


def lagrange_constraint_probe(
    storage: StorageRelation,
    x,
    seed: Optional[int] = None,
    cfg: Optional[NewtonConfig] = None,
) -> ProbeResult:
    """
    判定 x ∈ π(L)，找到时返回内部坐标（e_J 或 λ）作为见证

    Raises:
        Inconclusive: 非仿射方程的所有多起点 Newton 都失败
    """
    if isinstance(storage, ExplicitHamiltonian):
        return ProbeResult(True)

    eqs = InternalEquations(storage, x)
    if eqs.size == 0:
        return ProbeResult(True, witness=np.zeros(0))
    cfg = cfg or NewtonConfig.from_settings()

    if eqs.is_affine():
        u0 = np.zeros(eqs.size)
        A = eqs.jacobian(u0)
        h0 = eqs.residual(u0)
        u = least_squares(A, -h0)
        residual = inf_norm(A @ u + h0)
        feasible = residual <= cfg.tolerance * (1.0 + inf_norm(h0))
        return ProbeResult(feasible, witness=u if feasible else None, affine=True)

    for start in multistart_grid(eqs.size, seed):
        try:
            result = newton_solve(eqs.residual, eqs.jacobian, start, cfg)
        except (DomainError, NumericsError):
            continue
        return ProbeResult(True, witness=result.x)

    logger.warning("x = %s 处的 π(L) 探测没有结论", np.asarray(x).tolist())
    raise Inconclusive(f"无法判定 x = {np.asarray(x).tolist()} 是否属于 π(L)", point=np.asarray(x))


def projection_residual(storage: StorageRelation, x, seed: Optional[int] = None) -> float:
    """min_u ‖h(u)‖∞ 的多起点估计；x ∈ π(L) 时为 0"""
    if isinstance(storage, ExplicitHamiltonian):
        return 0.0
    eqs = InternalEquations(storage, x)
    if eqs.size == 0:
        return 0.0
    cfg = NewtonConfig.from_settings()
    best = float("inf")
    for start in multistart_grid(eqs.size, seed):
        try:
            result = gauss_newton_solve(eqs.residual, eqs.jacobian, start, cfg, raise_on_failure=False)
        except (DomainError, NumericsError):
            continue
        best = min(best, result.residual_norm)
        if result.converged:
            break
    return best


# =============================================================================
# Morse 族
# =============================================================================


def locate_zero_set(
    storage: MorseFamily,
    anchors: np.ndarray,
    polish: bool = True,
    cfg: Optional[NewtonConfig] = None,
) -> list[np.ndarray]:
    """把联合点 (x, λ) 投影到 {∂F/∂λ = 0}；投影失败的锚点丢弃"""
    n = storage.n

    def jacobian(y: np.ndarray) -> np.ndarray:
        return storage.rank_block(y)

    located = []
    for anchor in anchors:
        try:
            result = project_onto_constraints(storage.stationarity, jacobian, anchor, cfg, polish=polish)
        except (DomainError, NumericsError) as exc:
            logger.debug("零集投影失败 %s: %s", np.asarray(anchor).tolist(), exc)
            continue
        located.append(result.x)
    logger.debug("零集定位: %d / %d 个点（n=%d）", len(located), len(anchors), n)
    return located


def _joint_anchors(storage: MorseFamily, xs: np.ndarray, seed: Optional[int]) -> np.ndarray:
    grid = multistart_grid(storage.k, seed)
    return np.array([
        storage.joint(x, grid[i % len(grid)]) for i, x in enumerate(xs)
    ]).reshape(len(xs), storage.n + storage.k)


def validate_morse(
    storage: MorseFamily,
    samples=None,
    box: Optional[Box] = None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
    threshold: Optional[float] = None,
) -> ValidationReport:
    """
    在零集上检查 k × (n + k) 二阶偏导块的最小奇异值 ≥ threshold

    samples 为 (x, λ) 联合点；另加 count 个盒内 x 配多起点网格的 λ，
    统一投影到零集后再检查。
    """
    s = current_settings()
    threshold = s.rank_tolerance if threshold is None else threshold
    anchors = [np.asarray(p, dtype=float) for p in (samples if samples is not None else [])]
    xs = sample_points(storage.n, box, count, seed)
    anchors.extend(_joint_anchors(storage, xs, seed))

    report = ValidationReport(kind="morse", tolerance=threshold)
    points = locate_zero_set(storage, np.array(anchors).reshape(len(anchors), storage.n + storage.k))
    report.skipped = len(anchors) - len(points)
    if not points:
        raise NoZeroSetPointFound("Morse 族的零集 {∂F/∂λ = 0} 上找不到任何点")

    for y in points:
        try:
            sigma = min_singular_value(storage.rank_block(y))
        except DomainError:
            report.skipped += 1
            continue
        report.checks.append(SampleCheck(point=y, passed=sigma >= threshold, morse_sigma=sigma))
    return report


# =============================================================================
# 子流形采样
# =============================================================================


def sample_lagrangian_points(
    storage: StorageRelation,
    count: int,
    box: Optional[Box] = None,
    seed: Optional[int] = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """在子流形上取 (x, e) 点；无定义或投影失败的样本被丢弃"""
    pairs = []
    if isinstance(storage, ExplicitHamiltonian):
        for x in sample_points(storage.n, box, count, seed):
            try:
                pairs.append((x, storage.effort(x)))
            except DomainError:
                continue
    elif isinstance(storage, GeneratingFunction):
        for z in sample_points(storage.n, box, count, seed):
            try:
                pairs.append((storage.state_from_chart(z), storage.effort_from_chart(z)))
            except DomainError:
                continue
    else:
        xs = sample_points(storage.n, box, count, seed)
        for y in locate_zero_set(storage, _joint_anchors(storage, xs, seed), polish=False):
            try:
                pairs.append((y[: storage.n], storage.effort(y)))
            except DomainError:
                continue
    return pairs
