"""仿真配置"""
import math

import numpy as np
from pydantic import BaseModel, Field, model_validator

from phdae.errors import DimensionMismatch
from phdae.expr import ExprTree
from phdae.numerics import NewtonConfig

TIME_VARIABLE = "t"
# 区间长度与步长之比离整数多近时视为整除
GRID_SLACK = 1e-9


class SimConfig(BaseModel):
    """
    隐式中点法的时间网格与求解参数

    inputs 是关于 t 的表达式字符串（每个端口一个）；为空时端口输入恒为 0。
    """

    t0: float = 0.0
    t1: float = 1.0
    dt: float = Field(default=1e-3, gt=0, description="名义步长")
    newton: NewtonConfig = Field(default_factory=NewtonConfig.from_settings)
    inputs: list[str] = Field(default_factory=list)
    output_every: int = Field(default=1, ge=1, description="每隔多少步记录一行")
    check_index: bool = True

    @model_validator(mode="after")
    def _check_interval(self) -> "SimConfig":
        if not self.t1 > self.t0:
            raise ValueError(f"需要 t1 > t0，得到 t0={self.t0}, t1={self.t1}")
        return self

    @property
    def steps(self) -> int:
        ratio = (self.t1 - self.t0) / self.dt
        nearest = round(ratio)
        if nearest >= 1 and abs(ratio - nearest) <= GRID_SLACK * max(1.0, ratio):
            return int(nearest)
        return max(1, math.ceil(ratio))

    def grid(self) -> np.ndarray:
        """均匀网格，最后一点恰为 t1"""
        return np.linspace(self.t0, self.t1, self.steps + 1)

    def input_trees(self, m_P: int) -> list[ExprTree]:
        sources = self.inputs or ["0"] * m_P
        if len(sources) != m_P:
            raise DimensionMismatch(f"输入个数 {len(sources)} 与端口数 {m_P} 不一致")
        return [ExprTree.parse(src, [TIME_VARIABLE]) for src in sources]


def evaluate_inputs(trees: list[ExprTree], t: float) -> np.ndarray:
    return np.array([tree.evaluate([t]) for tree in trees], dtype=float)
