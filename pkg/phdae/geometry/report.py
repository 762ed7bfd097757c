"""验证报告"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class SampleCheck:
    """单个采样点上的检查结果"""
    point: np.ndarray
    passed: bool = True
    isotropy: float = 0.0
    skewness: float = 0.0
    dimension: int = 0
    expected_dimension: int = 0
    morse_sigma: Optional[float] = None

    @property
    def residual(self) -> float:
        """用于挑选最差样本的标量"""
        if self.morse_sigma is not None:
            return -self.morse_sigma
        return max(self.isotropy, self.skewness, float(self.dimension != self.expected_dimension))


@dataclass
class ValidationReport:
    """一组采样点的验证结果（kind = dirac / morse）"""
    kind: str
    tolerance: float
    checks: list[SampleCheck] = field(default_factory=list)
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[SampleCheck]:
        return [c for c in self.checks if not c.passed]

    def worst(self) -> Optional[SampleCheck]:
        """最差的样本（优先取失败样本）"""
        pool = self.failures or self.checks
        if not pool:
            return None
        return max(pool, key=lambda c: c.residual)

    @property
    def max_isotropy(self) -> float:
        return max((c.isotropy for c in self.checks), default=0.0)

    @property
    def max_skewness(self) -> float:
        return max((c.skewness for c in self.checks), default=0.0)

    @property
    def min_morse_sigma(self) -> Optional[float]:
        values = [c.morse_sigma for c in self.checks if c.morse_sigma is not None]
        return min(values) if values else None

    def format(self, verbose: bool = False) -> str:
        """人类可读的报告文本"""
        status = "通过" if self.passed else "失败"
        lines = [f"[{self.kind}] {status}：{len(self.checks)} 个采样点，跳过 {self.skipped} 个"]
        if self.kind == "dirac":
            lines.append(f"  最大各向同性残差: {self.max_isotropy:.3e}")
            lines.append(f"  最大反对称残差:   {self.max_skewness:.3e}")
        else:
            sigma = self.min_morse_sigma
            lines.append(f"  秩块最小奇异值:   {sigma:.3e}" if sigma is not None else "  秩块最小奇异值:   -")
        worst = self.worst()
        if worst is not None and (verbose or not self.passed):
            lines.append(f"  最差样本: {_format_point(worst.point)}")
            lines.append(f"    {_format_check(worst)}")
        if verbose:
            for check in self.checks:
                mark = "✓" if check.passed else "✗"
                lines.append(f"  {mark} {_format_point(check.point)}  {_format_check(check)}")
        return "\n".join(lines)


def _format_point(point) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in np.asarray(point).ravel()) + ")"


def _format_check(check: SampleCheck) -> str:
    if check.morse_sigma is not None:
        return f"σ_min = {check.morse_sigma:.3e}"
    return (
        f"isotropy = {check.isotropy:.3e}, skewness = {check.skewness:.3e}, "
        f"dim = {check.dimension}/{check.expected_dimension}"
    )
