"""
表达式子系统 - 解析、求值、结构求导

使用方式:
    from phdae.expr import parse

    tree = parse("x1^2 + sin(x2)", ["x1", "x2"])
    tree.evaluate([1.0, 0.0])     # 1.0
    tree.gradient([1.0, 0.0])     # [2.0, 1.0]
"""

from .nodes import FUNCTIONS
from .tree import ExprTree, MatrixExpr, parse, tree_sum

__all__ = ["ExprTree", "MatrixExpr", "parse", "tree_sum", "FUNCTIONS"]
