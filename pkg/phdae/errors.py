"""phdae 异常层次

所有异常都继承自 PhdaeError，CLI 根据异常类型映射退出码：
1 = 用法 / 文件格式问题，2 = 数学上的失败。
"""
from typing import Optional


class PhdaeError(Exception):
    """phdae 所有异常的基类"""

    pass


# =============================================================================
# 表达式
# =============================================================================


class ExprError(PhdaeError):
    """表达式相关错误"""

    pass


class ExprSyntaxError(ExprError):
    """表达式语法错误（带位置）"""

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"语法错误（位置 {position}）: {message}")


class UnknownVariable(ExprError):
    """表达式中出现未声明的变量"""

    def __init__(self, name: str, position: Optional[int] = None):
        self.name = name
        self.position = position
        where = f"（位置 {position}）" if position is not None else ""
        super().__init__(f"未知变量 '{name}'{where}")


class DomainError(ExprError):
    """求值点不在表达式定义域内（ln(-1)、除以零等）"""

    pass


# =============================================================================
# 数值核心
# =============================================================================


class NumericsError(PhdaeError):
    """数值计算错误"""

    pass


class SingularMatrix(NumericsError):
    """主元低于相对阈值，矩阵奇异"""

    pass


class NoConvergence(NumericsError):
    """迭代在预算内未收敛"""

    pass


class SingularJacobian(SingularMatrix, NoConvergence):
    """Newton 迭代点处 Jacobian 奇异（同时属于两种失败）"""

    pass


# =============================================================================
# 几何
# =============================================================================


class RankDeficientConstraint(PhdaeError):
    """约束矩阵 B(x) 列不满秩"""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class Inconclusive(PhdaeError):
    """多起点 Newton 全部失败，但无法证明不可行"""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class NoZeroSetPointFound(PhdaeError):
    """Morse 族的零集上找不到任何点"""

    pass


# =============================================================================
# Legendre 变换
# =============================================================================


class NonConvexPoint(PhdaeError):
    """Hessian 奇异：x ↦ ∇P(x) 在局部不是单射"""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


# =============================================================================
# 系统装配与转换
# =============================================================================


class DimensionMismatch(PhdaeError):
    """各部件维数不一致"""

    pass


class ValidationFailed(PhdaeError):
    """数值验证未通过（附带报告）"""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class MorseRankFailure(ValidationFailed):
    """Morse 族在零集上不满足秩条件"""

    pass


class NothingToConvert(PhdaeError):
    """系统没有可转换的约束"""

    pass


# =============================================================================
# 仿真
# =============================================================================


class IndexViolation(PhdaeError):
    """中点处指标块奇异，DAE 不再是 index-1"""

    def __init__(self, message: str, sigma_min: float = 0.0, time: Optional[float] = None):
        self.sigma_min = sigma_min
        self.time = time
        super().__init__(message)


class ChartBreakdown(NoConvergence):
    """生成函数坐标卡退化，无法继续在 (x_I, e_J) 中积分"""

    pass


# =============================================================================
# 算例与 CLI
# =============================================================================


class UnknownFixture(PhdaeError):
    """不存在的内置算例"""

    pass


class DescriptionError(PhdaeError):
    """系统描述文件格式错误"""

    pass
