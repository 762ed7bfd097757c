"""Newton 求解器配置"""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from phdae.config import Settings, current_settings


class NewtonConfig(BaseModel):
    """阻尼 Newton 的参数（步长减半，无信赖域）"""

    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default=1e-10, gt=0, description="残差无穷范数容差")
    max_iterations: int = Field(default=50, ge=1, description="最大迭代次数")
    max_halvings: int = Field(default=20, ge=0, description="每次迭代最多减半次数")

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "NewtonConfig":
        s = settings or current_settings()
        return cls(
            tolerance=s.newton_tolerance,
            max_iterations=s.newton_max_iterations,
            max_halvings=s.newton_max_halvings,
        )
