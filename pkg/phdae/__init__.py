"""phdae - 非线性端口哈密顿 DAE 工具箱（Dirac / Lagrange 代数约束）"""
__version__ = "0.1.0"
