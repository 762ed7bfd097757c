"""配置管理模块"""
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """工具箱配置，从环境变量（PHDAE_ 前缀）和 .env 文件加载"""

    model_config = SettingsConfigDict(
        env_prefix="PHDAE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # 采样与多起点
    seed: int = Field(default=20240117, description="采样 / 多起点抖动的随机种子")
    sample_count: int = Field(default=100, ge=0, description="每份验证报告的随机采样点数")
    sample_low: float = Field(default=-1.0, description="默认采样盒下界")
    sample_high: float = Field(default=1.0, description="默认采样盒上界")

    # Newton
    newton_tolerance: float = Field(default=1e-10, gt=0, description="残差容差（无穷范数）")
    newton_max_iterations: int = Field(default=50, ge=1, description="最大迭代次数")
    newton_max_halvings: int = Field(default=20, ge=0, description="每次迭代最多步长减半次数")

    # 验证阈值
    validation_tolerance: float = Field(default=1e-10, gt=0, description="各向同性 / 反对称残差阈值")
    rank_tolerance: float = Field(default=1e-8, gt=0, description="相对奇异值低于此值视为秩亏")

    # 应用配置
    debug: bool = Field(default=False, description="调试模式（DEBUG 日志）")

    @property
    def default_box(self) -> tuple[float, float]:
        """默认采样区间"""
        return (self.sample_low, self.sample_high)


# 全局配置实例
settings = Settings()


def reload_settings() -> Settings:
    """重新读取环境变量，返回新的配置实例"""
    global settings
    settings = Settings()
    return settings


def current_settings() -> Settings:
    """当前生效的配置（reload_settings 之后也能拿到新实例）"""
    return settings
