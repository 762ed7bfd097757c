"""
(广义) 端口哈密顿系统 = Dirac 结构 + 储能关系 + 线性电阻性耗散

    e_R = −R̄ f_R,  R̄ 对称半正定
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from phdae.config import current_settings
from phdae.errors import (
    DimensionMismatch,
    MorseRankFailure,
    NoZeroSetPointFound,
    RankDeficientConstraint,
    ValidationFailed,
)
from phdae.expr import ExprTree, MatrixExpr
from phdae.geometry import (
    DiracStructure,
    ExplicitHamiltonian,
    MorseFamily,
    StorageRelation,
    ValidationReport,
    validate_dirac,
    validate_morse,
)
from phdae.geometry.sampling import Box

logger = logging.getLogger(__name__)

# R̄ 对称性 / 最小特征值容差
RBAR_TOLERANCE = 1e-12


class PHSystem:
    """
    组装好的系统（构造后不可变）

    一般通过 assemble() 得到；直接构造不做验证。
    """

    def __init__(
        self,
        dirac: DiracStructure,
        storage: StorageRelation,
        rbar=None,
        sample_box: Optional[Box] = None,
        name: str = "",
    ):
        self.dirac = dirac
        self.storage = storage
        m_R = dirac.m_R
        self.rbar = np.zeros((m_R, m_R)) if rbar is None else np.asarray(rbar, dtype=float).reshape(m_R, m_R)
        self.sample_box = sample_box
        self.name = name
        self._structure: Optional[MatrixExpr] = None

    @property
    def state_names(self) -> tuple[str, ...]:
        return self.dirac.variables

    @property
    def n(self) -> int:
        return self.dirac.n

    @property
    def k(self) -> int:
        return self.dirac.k

    @property
    def m_R(self) -> int:
        return self.dirac.m_R

    @property
    def m_P(self) -> int:
        return self.dirac.m_P

    @property
    def storage_kind(self) -> str:
        return self.storage.kind

    def dissipation_matrix(self) -> MatrixExpr:
        """R(x) = G_R(x) R̄ G_Rᵀ(x)"""
        return self.dirac.G_R.congruence(self.rbar)

    def structure_matrix(self) -> MatrixExpr:
        """J(x) − R(x)"""
        if self._structure is None:
            if self.m_R:
                self._structure = self.dirac.J - self.dissipation_matrix()
            else:
                self._structure = self.dirac.J
        return self._structure

    def outputs(self, x, e_S) -> np.ndarray:
        """y = Gᵀ(x) e_S"""
        return self.dirac.G.evaluate(x).T @ np.asarray(e_S, dtype=float)

    def port_power(self, x, e_S, u) -> float:
        """e_Pᵀ f_P = uᵀ y"""
        return float(np.asarray(u, dtype=float) @ self.outputs(x, e_S))

    def dissipated_power(self, x, e_S) -> float:
        """−e_Rᵀ f_R = f_Rᵀ R̄ f_R ≥ 0"""
        if not self.m_R:
            return 0.0
        f_R = self.dirac.G_R.evaluate(x).T @ np.asarray(e_S, dtype=float)
        return float(f_R @ self.rbar @ f_R)

    def __repr__(self) -> str:
        return (
            f"PHSystem(name={self.name!r}, n={self.n}, k={self.k}, m_R={self.m_R}, "
            f"m_P={self.m_P}, storage={self.storage_kind})"
        )


def check_rbar(rbar: np.ndarray) -> None:
    """R̄ 必须对称半正定"""
    if rbar.size == 0:
        return
    if np.max(np.abs(rbar - rbar.T)) > RBAR_TOLERANCE:
        raise ValidationFailed("R̄ 不对称")
    smallest = float(np.linalg.eigvalsh(0.5 * (rbar + rbar.T)).min())
    if smallest < -RBAR_TOLERANCE:
        raise ValidationFailed(f"R̄ 不是半正定的（最小特征值 {smallest:.3e}）")


def assemble(
    dirac: DiracStructure,
    storage: StorageRelation,
    rbar=None,
    sample_box: Optional[Box] = None,
    name: str = "",
    samples: Optional[Sequence] = None,
) -> PHSystem:
    """
    组装并验证系统

    在采样盒上运行 validate_dirac，Morse 族另外运行 validate_morse。

    Raises:
        DimensionMismatch: 维数不一致
        ValidationFailed: 数值验证失败（report 属性附带报告）
        MorseRankFailure: Morse 族零集上秩条件不成立
    """
    if storage.n != dirac.n:
        raise DimensionMismatch(f"储能维数 {storage.n} 与 Dirac 结构维数 {dirac.n} 不一致")
    if tuple(storage.state_names) != dirac.variables:
        raise DimensionMismatch(
            f"储能变量 {list(storage.state_names)} 与 Dirac 结构变量 {list(dirac.variables)} 不一致"
        )
    m_R = dirac.m_R
    rbar_arr = np.zeros((m_R, m_R)) if rbar is None else np.asarray(rbar, dtype=float)
    if rbar_arr.shape != (m_R, m_R):
        raise DimensionMismatch(f"R̄ 应为 {m_R}×{m_R}，得到 {rbar_arr.shape}")
    check_rbar(rbar_arr)

    try:
        report = validate_dirac(dirac, samples=samples, box=sample_box)
    except RankDeficientConstraint as exc:
        raise ValidationFailed(f"Dirac 结构验证失败: {exc}") from exc
    if not report.passed:
        raise ValidationFailed("Dirac 结构验证失败\n" + report.format(), report=report)

    if isinstance(storage, MorseFamily):
        ensure_morse_rank(storage, sample_box)

    system = PHSystem(dirac, storage, rbar_arr, sample_box=sample_box, name=name)
    logger.debug("组装完成: %r", system)
    return system


def ensure_morse_rank(storage: MorseFamily, sample_box: Optional[Box] = None) -> ValidationReport:
    try:
        report = validate_morse(storage, box=_joint_box(sample_box, storage))
    except NoZeroSetPointFound as exc:
        raise MorseRankFailure(str(exc)) from exc
    if not report.passed:
        raise MorseRankFailure("Morse 族秩条件不成立\n" + report.format(), report=report)
    return report


def _joint_box(box: Optional[Box], storage: MorseFamily) -> Optional[Box]:
    """Morse 验证只在 x 上采样；逐维给出的采样盒只取状态部分"""
    if box is None:
        return None
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 2:
        return [tuple(row) for row in arr[: storage.n]]
    return tuple(arr)


def extend_box(box: Optional[Box], n_old: int, extra: int) -> Optional[Box]:
    """状态扩展后的采样盒：逐维给出时补上默认区间"""
    if box is None:
        return None
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 1:
        return tuple(arr)
    low, high = current_settings().default_box
    return [tuple(row) for row in arr[:n_old]] + [(low, high)] * extra


@dataclass
class ISOForm:
    """输入-状态-输出形式：ẋ = (J − R)∇H + G u,  y = Gᵀ∇H"""
    A: MatrixExpr
    G: MatrixExpr
    H: ExprTree

    def vector_field(self, x, u=None) -> np.ndarray:
        u = np.zeros(self.G.cols) if u is None else np.asarray(u, dtype=float)
        return self.A.evaluate(x) @ self.H.gradient(x) + self.G.evaluate(x) @ u

    def output(self, x) -> np.ndarray:
        return self.G.evaluate(x).T @ self.H.gradient(x)


def is_input_state_output(sys: PHSystem) -> tuple[bool, Optional[ISOForm]]:
    """无 Dirac 约束且储能为显式哈密顿量时返回 (True, ISOForm)"""
    if sys.k == 0 and isinstance(sys.storage, ExplicitHamiltonian):
        return True, ISOForm(A=sys.structure_matrix(), G=sys.dirac.G, H=sys.storage.H)
    return False, None
