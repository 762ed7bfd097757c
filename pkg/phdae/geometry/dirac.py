"""
图形式的调制 Dirac 结构

    −f_S = J(x) e_S + B(x) λ* + G_R(x) e_R + G(x) e_P,   0 = Bᵀ(x) e_S
     f_R = G_Rᵀ(x) e_S,   f_P = Gᵀ(x) e_S

状态流 f_S = −ẋ。配对 ⟨e|f⟩ = e_Sᵀf_S + e_Rᵀf_R + e_Pᵀf_P 在 J 反对称时恒为零。
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from phdae.config import current_settings
from phdae.errors import DimensionMismatch, DomainError, RankDeficientConstraint
from phdae.expr import MatrixExpr
from phdae.numerics import matrix_rank, null_space_basis

from .report import SampleCheck, ValidationReport
from .sampling import Box, make_rng, sample_points

logger = logging.getLogger(__name__)

# 每个样本额外检查的随机线性组合数
RANDOM_COMBINATIONS = 8


@dataclass
class DiracBasis:
    """D(x) 的一组基，flows / efforts 的第 j 列构成第 j 个 (f, e) 对"""
    flows: np.ndarray
    efforts: np.ndarray

    @property
    def size(self) -> int:
        return self.flows.shape[1]

    def stacked(self) -> np.ndarray:
        return np.vstack([self.flows, self.efforts])


class DiracStructure:
    """J(x)、B(x)、G_R(x)、G(x) 给出的图形式 Dirac 结构"""

    def __init__(
        self,
        J: MatrixExpr,
        B: Optional[MatrixExpr] = None,
        G_R: Optional[MatrixExpr] = None,
        G: Optional[MatrixExpr] = None,
    ):
        if J.rows != J.cols:
            raise DimensionMismatch(f"J 必须是方阵，得到 {J.shape}")
        n = J.rows
        variables = J.variables
        if len(variables) != n:
            raise DimensionMismatch(f"J 的变量数 {len(variables)} 与状态维数 {n} 不一致")
        self.J = J
        self.B = B if B is not None else MatrixExpr.zeros(n, 0, variables)
        self.G_R = G_R if G_R is not None else MatrixExpr.zeros(n, 0, variables)
        self.G = G if G is not None else MatrixExpr.zeros(n, 0, variables)
        for label, m in (("B", self.B), ("G_R", self.G_R), ("G", self.G)):
            if m.rows != n:
                raise DimensionMismatch(f"{label} 应有 {n} 行，得到 {m.rows}")
            if m.variables != variables:
                raise DimensionMismatch(f"{label} 的变量表与 J 不一致")

    # ------------------------------------------------------------------ 维数

    @property
    def variables(self) -> tuple[str, ...]:
        return self.J.variables

    @property
    def n(self) -> int:
        return self.J.rows

    @property
    def k(self) -> int:
        return self.B.cols

    @property
    def m_R(self) -> int:
        return self.G_R.cols

    @property
    def m_P(self) -> int:
        return self.G.cols

    @property
    def flow_dim(self) -> int:
        """dim F = n + m_R + m_P"""
        return self.n + self.m_R + self.m_P

    # ------------------------------------------------------------------ 数值

    def matrices(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.J.evaluate(x), self.B.evaluate(x), self.G_R.evaluate(x), self.G.evaluate(x))

    def flows(self, x, e_S, lam_star=None, e_R=None, e_P=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """图映射：(e_S, λ*, e_R, e_P) ↦ (f_S, f_R, f_P)"""
        J, B, G_R, G = self.matrices(x)
        e_S = np.asarray(e_S, dtype=float)
        lam_star = np.zeros(self.k) if lam_star is None else np.asarray(lam_star, dtype=float)
        e_R = np.zeros(self.m_R) if e_R is None else np.asarray(e_R, dtype=float)
        e_P = np.zeros(self.m_P) if e_P is None else np.asarray(e_P, dtype=float)
        f_S = -(J @ e_S + B @ lam_star + G_R @ e_R + G @ e_P)
        return f_S, G_R.T @ e_S, G.T @ e_S

    def skewness(self, x) -> float:
        """max |J + Jᵀ|"""
        J = self.J.evaluate(x)
        return float(np.max(np.abs(J + J.T))) if J.size else 0.0

    def effort_constraint(self, x, e_S) -> np.ndarray:
        """Bᵀ(x) e_S"""
        return self.B.evaluate(x).T @ np.asarray(e_S, dtype=float)

    def rebase(self, variables: Sequence[str], renames=None) -> "DiracStructure":
        return DiracStructure(
            self.J.rebase(variables, renames),
            self.B.rebase(variables, renames),
            self.G_R.rebase(variables, renames),
            self.G.rebase(variables, renames),
        )

    def __repr__(self) -> str:
        return f"DiracStructure(n={self.n}, k={self.k}, m_R={self.m_R}, m_P={self.m_P})"


def dirac_sample_basis(D: DiracStructure, x, rtol: Optional[float] = None) -> DiracBasis:
    """
    在 x 处构造 D(x) 的基

    依次扫过 ker Bᵀ 中的基向量、λ* 的单位向量、e_R 与 e_P 的单位向量，
    共 (n − k) + k + m_R + m_P = dim F 列。
    """
    rtol = current_settings().rank_tolerance if rtol is None else rtol
    J, B, G_R, G = D.matrices(x)
    n, k, m_R, m_P = D.n, D.k, D.m_R, D.m_P
    if k and matrix_rank(B, rtol) < k:
        raise RankDeficientConstraint(f"B(x) 在 {np.asarray(x).tolist()} 处列不满秩", point=np.asarray(x))

    size = n + m_R + m_P
    kernel = null_space_basis(B.T, rtol) if k else np.eye(n)
    flow_cols: list[np.ndarray] = []
    effort_cols: list[np.ndarray] = []

    for v in kernel.T:
        flow_cols.append(np.concatenate([-J @ v, G_R.T @ v, G.T @ v]))
        effort_cols.append(np.concatenate([v, np.zeros(m_R + m_P)]))
    for source, offset in ((B, None), (G_R, n), (G, n + m_R)):
        for j in range(source.shape[1]):
            flow_cols.append(np.concatenate([-source[:, j], np.zeros(m_R + m_P)]))
            effort = np.zeros(size)
            if offset is not None:
                effort[offset + j] = 1.0
            effort_cols.append(effort)

    return DiracBasis(
        flows=np.array(flow_cols).T.reshape(size, len(flow_cols)),
        efforts=np.array(effort_cols).T.reshape(size, len(effort_cols)),
    )


def isotropy_residual(basis: DiracBasis, rng: np.random.Generator) -> float:
    """max(½|EᵀF + FᵀE|) 与若干随机组合 |eᵀf| 中的最大者"""
    E, F = basis.efforts, basis.flows
    if basis.size == 0:
        return 0.0
    pairing = E.T @ F
    residual = float(np.max(np.abs(0.5 * (pairing + pairing.T))))
    for _ in range(RANDOM_COMBINATIONS):
        c = rng.standard_normal(basis.size)
        residual = max(residual, abs(float((E @ c) @ (F @ c))))
    return residual


def validate_dirac(
    D: DiracStructure,
    samples=None,
    tolerance: Optional[float] = None,
    box: Optional[Box] = None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
) -> ValidationReport:
    """
    逐点检查 Dirac 结构的公理

    检查点 = 用户给出的 samples + 盒内 count 个确定性随机点。
    每个点记录各向同性残差、dim D(x)、J 的反对称残差。
    表达式在某点无定义时跳过该点并记 warning。
    """
    s = current_settings()
    tolerance = s.validation_tolerance if tolerance is None else tolerance
    points = [np.asarray(p, dtype=float) for p in (samples if samples is not None else [])]
    points.extend(sample_points(D.n, box, count, seed))
    rng = make_rng(s.seed if seed is None else seed)

    report = ValidationReport(kind="dirac", tolerance=tolerance)
    for x in points:
        try:
            basis = dirac_sample_basis(D, x)
            skew = D.skewness(x)
        except DomainError as exc:
            logger.warning("跳过采样点 %s: %s", x.tolist(), exc)
            report.skipped += 1
            continue
        iso = isotropy_residual(basis, rng)
        dim = matrix_rank(basis.stacked(), s.rank_tolerance)
        report.checks.append(SampleCheck(
            point=x,
            passed=iso <= tolerance and skew <= tolerance and dim == D.flow_dim,
            isotropy=iso,
            skewness=skew,
            dimension=dim,
            expected_dimension=D.flow_dim,
        ))
    logger.debug("Dirac 验证: %d 个点, 最大各向同性残差 %.3e", len(report.checks), report.max_isotropy)
    return report
