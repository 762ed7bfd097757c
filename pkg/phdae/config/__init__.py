"""配置模块"""
from .settings import Settings, current_settings, reload_settings, settings

__all__ = ["Settings", "settings", "current_settings", "reload_settings"]
