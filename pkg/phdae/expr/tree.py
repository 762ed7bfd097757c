"""
ExprTree / MatrixExpr

ExprTree = 节点 + 有序变量表。求值走编译后的闭包，导数树按变量下标缓存。
MatrixExpr 是同一变量表上的行优先 ExprTree 网格，用来承载 J(x)、B(x)、G(x)、G_R(x)。
"""

import math
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from phdae.errors import DimensionMismatch, DomainError, ExprError, UnknownVariable

from . import nodes
from .nodes import Const, Node, Var
from .parser import parse_node

Number = Union[int, float]


def _check_names(variables: Sequence[str]) -> tuple[str, ...]:
    names = tuple(variables)
    if len(set(names)) != len(names):
        raise ExprError(f"变量名重复: {list(names)}")
    return names


class ExprTree:
    """声明变量表上的标量表达式"""

    __slots__ = ("root", "variables", "_index", "_derivatives", "_compiled", "_free")

    def __init__(self, root: Node, variables: Sequence[str]):
        self.root = root
        self.variables = _check_names(variables)
        self._index = {name: i for i, name in enumerate(self.variables)}
        self._derivatives: dict[int, "ExprTree"] = {}
        self._compiled: Optional[Callable[[list[float]], float]] = None
        self._free = nodes.free_indices(root)
        for i in self._free:
            if not 0 <= i < len(self.variables):
                raise ExprError(f"变量下标 {i} 超出变量表（{len(self.variables)} 个）")

    # ------------------------------------------------------------------ 构造

    @classmethod
    def parse(cls, src: str, variables: Sequence[str]) -> "ExprTree":
        names = _check_names(variables)
        return cls(parse_node(str(src), names), names)

    @classmethod
    def constant(cls, value: Number, variables: Sequence[str]) -> "ExprTree":
        return cls(nodes.const(value), variables)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "ExprTree":
        names = _check_names(variables)
        if name not in names:
            raise UnknownVariable(name)
        return cls(Var(names.index(name), name), names)

    # ------------------------------------------------------------------ 属性

    @property
    def size(self) -> int:
        return len(self.variables)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.root, Const)

    @property
    def value(self) -> float:
        """常量树的值"""
        if not self.is_constant:
            raise ExprError(f"不是常量表达式: {self.to_source()}")
        return self.root.value

    @property
    def is_zero(self) -> bool:
        return nodes.is_const(self.root, 0.0)

    def index_of(self, name_or_index: Union[str, int]) -> int:
        if isinstance(name_or_index, str):
            if name_or_index not in self._index:
                raise UnknownVariable(name_or_index)
            return self._index[name_or_index]
        return int(name_or_index)

    def depends_on(self, name_or_index: Union[str, int]) -> bool:
        return self.index_of(name_or_index) in self._free

    @property
    def free_variables(self) -> tuple[str, ...]:
        return tuple(self.variables[i] for i in sorted(self._free))

    # ------------------------------------------------------------------ 求值

    def evaluate(self, point: Sequence[float]) -> float:
        """在 point 处求值；越出定义域时抛 DomainError"""
        values = [float(v) for v in point]
        if len(values) != len(self.variables):
            raise DimensionMismatch(
                f"求值点长度 {len(values)} 与变量数 {len(self.variables)} 不一致"
            )
        if self._compiled is None:
            self._compiled = nodes.compile_node(self.root)
        try:
            result = self._compiled(values)
        except nodes.NUMERIC_FAILURES as exc:
            raise DomainError(f"{self.to_source()} 在 {values} 处无定义: {exc}") from exc
        if isinstance(result, complex) or not math.isfinite(result):
            raise DomainError(f"{self.to_source()} 在 {values} 处的值不是有限实数")
        return float(result)

    __call__ = evaluate

    # ------------------------------------------------------------------ 求导

    def derivative(self, name_or_index: Union[str, int]) -> "ExprTree":
        """结构求导（结果缓存）"""
        i = self.index_of(name_or_index)
        if not 0 <= i < len(self.variables):
            raise ExprError(f"变量下标 {i} 超出变量表")
        cached = self._derivatives.get(i)
        if cached is None:
            if i in self._free:
                cached = ExprTree(nodes.differentiate(self.root, i), self.variables)
            else:
                cached = ExprTree(nodes.ZERO, self.variables)
            self._derivatives[i] = cached
        return cached

    def gradient_trees(self) -> list["ExprTree"]:
        return [self.derivative(i) for i in range(len(self.variables))]

    def gradient(self, point: Sequence[float]) -> np.ndarray:
        return np.array([d.evaluate(point) for d in self.gradient_trees()], dtype=float)

    def hessian(self, point: Sequence[float], mirror: bool = True) -> np.ndarray:
        """
        二阶偏导矩阵

        mirror=True 时只对上三角求导求值，下三角镜像；
        mirror=False 时每个条目都按 ∂/∂x_j(∂/∂x_i) 独立求导，
        用于核对对称性 |H_ij − H_ji| ≤ 1e-12。
        """
        n = len(self.variables)
        result = np.zeros((n, n))
        for i in range(n):
            first = self.derivative(i)
            if first.is_zero:
                continue
            for j in range(i if mirror else 0, n):
                second = first.derivative(j)
                if second.is_zero:
                    continue
                value = second.evaluate(point)
                result[i, j] = value
                if mirror:
                    result[j, i] = value
        return result

    # ------------------------------------------------------------------ 变换

    def to_source(self) -> str:
        return nodes.to_source(self.root)

    def substitute(
        self,
        mapping: Mapping[str, "ExprTree"],
        variables: Optional[Sequence[str]] = None,
    ) -> "ExprTree":
        """
        把变量替换成表达式，结果放到新变量表上

        mapping 中的树必须定义在 variables 上；未出现在 mapping 中的变量
        按名字映射到 variables。
        """
        names = _check_names(variables if variables is not None else self.variables)
        lookup = {name: i for i, name in enumerate(names)}
        for name, tree in mapping.items():
            if tree.variables != names:
                raise DimensionMismatch(f"替换 {name} 的表达式变量表与目标不一致")

        def replace(var: Var) -> Node:
            if var.name in mapping:
                return mapping[var.name].root
            if var.name not in lookup:
                raise UnknownVariable(var.name)
            return Var(lookup[var.name], var.name)

        return ExprTree(nodes.substitute(self.root, replace), names)

    def rebase(
        self,
        variables: Sequence[str],
        renames: Optional[Mapping[str, str]] = None,
    ) -> "ExprTree":
        """按名字搬到另一个变量表上（可同时改名）"""
        names = _check_names(variables)
        renames = dict(renames or {})
        lookup = {name: i for i, name in enumerate(names)}

        def replace(var: Var) -> Node:
            target = renames.get(var.name, var.name)
            if target not in lookup:
                raise UnknownVariable(target)
            return Var(lookup[target], target)

        return ExprTree(nodes.substitute(self.root, replace), names)

    # ------------------------------------------------------------------ 运算

    def _coerce(self, other) -> Optional[Node]:
        if isinstance(other, ExprTree):
            if other.variables != self.variables:
                raise DimensionMismatch("两个表达式的变量表不一致")
            return other.root
        if isinstance(other, (int, float, np.floating, np.integer)):
            return nodes.const(float(other))
        return None

    def _combine(self, other, op, reverse: bool = False):
        node = self._coerce(other)
        if node is None:
            return NotImplemented
        left, right = (node, self.root) if reverse else (self.root, node)
        return ExprTree(op(left, right), self.variables)

    def __add__(self, other):
        return self._combine(other, nodes.add)

    def __radd__(self, other):
        return self._combine(other, nodes.add, reverse=True)

    def __sub__(self, other):
        return self._combine(other, nodes.sub)

    def __rsub__(self, other):
        return self._combine(other, nodes.sub, reverse=True)

    def __mul__(self, other):
        return self._combine(other, nodes.mul)

    def __rmul__(self, other):
        return self._combine(other, nodes.mul, reverse=True)

    def __truediv__(self, other):
        return self._combine(other, nodes.div)

    def __rtruediv__(self, other):
        return self._combine(other, nodes.div, reverse=True)

    def __neg__(self) -> "ExprTree":
        return ExprTree(nodes.neg(self.root), self.variables)

    def __pow__(self, exponent: Number) -> "ExprTree":
        return ExprTree(nodes.power(self.root, float(exponent)), self.variables)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExprTree):
            return NotImplemented
        return self.root == other.root and self.variables == other.variables

    def __hash__(self) -> int:
        return hash((self.root, self.variables))

    def __repr__(self) -> str:
        return f"ExprTree({self.to_source()!r}, variables={list(self.variables)})"

    def __str__(self) -> str:
        return self.to_source()


def parse(src: str, variables: Sequence[str]) -> ExprTree:
    """解析表达式源码"""
    return ExprTree.parse(src, variables)


def tree_sum(terms: Iterable[ExprTree], variables: Sequence[str]) -> ExprTree:
    """逐项相加（空和为 0）"""
    root: Node = nodes.ZERO
    for term in terms:
        root = nodes.add(root, term.root)
    return ExprTree(root, variables)


class MatrixExpr:
    """行优先的 ExprTree 网格"""

    def __init__(self, rows: int, cols: int, entries: Sequence[ExprTree], variables: Sequence[str]):
        self.rows = int(rows)
        self.cols = int(cols)
        self.variables = _check_names(variables)
        self.entries = tuple(entries)
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"矩阵条目数 {len(self.entries)} ≠ {self.rows}×{self.cols}"
            )
        for entry in self.entries:
            if entry.variables != self.variables:
                raise DimensionMismatch("矩阵条目的变量表不一致")
        self.is_constant = all(e.is_constant for e in self.entries)
        self._constant_value: Optional[np.ndarray] = None
        self._derivatives: dict[int, "MatrixExpr"] = {}
        if self.is_constant:
            self._constant_value = np.array(
                [e.value for e in self.entries], dtype=float
            ).reshape(self.rows, self.cols)

    # ------------------------------------------------------------------ 构造

    @classmethod
    def parse(
        cls,
        grid: Sequence[Sequence[Union[str, Number]]],
        variables: Sequence[str],
        rows: Optional[int] = None,
        cols: Optional[int] = None,
    ) -> "MatrixExpr":
        """从字符串 / 数字网格解析；空网格需要显式给出 rows 或 cols"""
        grid = [list(row) for row in grid]
        n_rows = len(grid) if rows is None else rows
        if len(grid) != n_rows:
            raise DimensionMismatch(f"矩阵应有 {n_rows} 行，实际 {len(grid)} 行")
        if cols is None:
            cols = len(grid[0]) if grid else 0
        for i, row in enumerate(grid):
            if len(row) != cols:
                raise DimensionMismatch(f"第 {i + 1} 行应有 {cols} 列，实际 {len(row)} 列")
        entries = [ExprTree.parse(str(cell), variables) for row in grid for cell in row]
        return cls(n_rows, cols, entries, variables)

    @classmethod
    def from_array(cls, array, variables: Sequence[str]) -> "MatrixExpr":
        values = np.atleast_2d(np.asarray(array, dtype=float))
        rows, cols = values.shape
        entries = [ExprTree.constant(v, variables) for v in values.ravel()]
        return cls(rows, cols, entries, variables)

    @classmethod
    def zeros(cls, rows: int, cols: int, variables: Sequence[str]) -> "MatrixExpr":
        zero = ExprTree.constant(0.0, variables)
        return cls(rows, cols, [zero] * (rows * cols), variables)

    @classmethod
    def identity(cls, n: int, variables: Sequence[str]) -> "MatrixExpr":
        return cls.from_array(np.eye(n), variables) if n else cls.zeros(0, 0, variables)

    @classmethod
    def column(cls, entries: Sequence[ExprTree], variables: Sequence[str]) -> "MatrixExpr":
        return cls(len(entries), 1, entries, variables)

    @staticmethod
    def block(blocks: Sequence[Sequence["MatrixExpr"]]) -> "MatrixExpr":
        """按块拼接（每个块行内行数一致，各块行的总列数一致）"""
        variables = blocks[0][0].variables
        total_cols = sum(b.cols for b in blocks[0])
        entries: list[ExprTree] = []
        total_rows = 0
        for block_row in blocks:
            height = block_row[0].rows
            if any(b.rows != height for b in block_row):
                raise DimensionMismatch("同一块行内的行数不一致")
            if sum(b.cols for b in block_row) != total_cols:
                raise DimensionMismatch("各块行的总列数不一致")
            for i in range(height):
                for b in block_row:
                    entries.extend(b.entries[i * b.cols:(i + 1) * b.cols])
            total_rows += height
        return MatrixExpr(total_rows, total_cols, entries, variables)

    # ------------------------------------------------------------------ 访问

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def entry(self, i: int, j: int) -> ExprTree:
        return self.entries[i * self.cols + j]

    def column_trees(self, j: int) -> list[ExprTree]:
        return [self.entry(i, j) for i in range(self.rows)]

    def depends_on(self, name_or_index: Union[str, int]) -> bool:
        return any(e.depends_on(name_or_index) for e in self.entries)

    def to_grid(self) -> list[list[str]]:
        return [[self.entry(i, j).to_source() for j in range(self.cols)] for i in range(self.rows)]

    # ------------------------------------------------------------------ 数值

    def evaluate(self, point: Sequence[float]) -> np.ndarray:
        if self._constant_value is not None:
            return self._constant_value.copy()
        values = [e.evaluate(point) for e in self.entries]
        return np.array(values, dtype=float).reshape(self.rows, self.cols)

    def derivative(self, name_or_index: Union[str, int]) -> "MatrixExpr":
        """逐条目求偏导"""
        i = name_or_index if isinstance(name_or_index, int) else self.variables.index(name_or_index)
        cached = self._derivatives.get(i)
        if cached is None:
            if self.is_constant:
                cached = MatrixExpr.zeros(self.rows, self.cols, self.variables)
            else:
                cached = MatrixExpr(
                    self.rows, self.cols, [e.derivative(i) for e in self.entries], self.variables
                )
            self._derivatives[i] = cached
        return cached

    # ------------------------------------------------------------------ 变换

    def transpose(self) -> "MatrixExpr":
        entries = [self.entry(i, j) for j in range(self.cols) for i in range(self.rows)]
        return MatrixExpr(self.cols, self.rows, entries, self.variables)

    @property
    def T(self) -> "MatrixExpr":
        return self.transpose()

    def rebase(self, variables: Sequence[str], renames: Optional[Mapping[str, str]] = None) -> "MatrixExpr":
        return MatrixExpr(
            self.rows, self.cols, [e.rebase(variables, renames) for e in self.entries], variables
        )

    def substitute(self, mapping: Mapping[str, ExprTree], variables: Sequence[str]) -> "MatrixExpr":
        return MatrixExpr(
            self.rows, self.cols, [e.substitute(mapping, variables) for e in self.entries], variables
        )

    def __matmul__(self, other: "MatrixExpr") -> "MatrixExpr":
        if not isinstance(other, MatrixExpr):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionMismatch(f"矩阵乘法维数不一致: {self.shape} @ {other.shape}")
        if self.variables != other.variables:
            raise DimensionMismatch("矩阵乘法两侧的变量表不一致")
        entries = []
        for i in range(self.rows):
            for j in range(other.cols):
                root: Node = nodes.ZERO
                for k in range(self.cols):
                    root = nodes.add(root, nodes.mul(self.entry(i, k).root, other.entry(k, j).root))
                entries.append(ExprTree(root, self.variables))
        return MatrixExpr(self.rows, other.cols, entries, self.variables)

    def _elementwise(self, other: "MatrixExpr", op) -> "MatrixExpr":
        if self.shape != other.shape:
            raise DimensionMismatch(f"矩阵形状不一致: {self.shape} vs {other.shape}")
        entries = [op(a, b) for a, b in zip(self.entries, other.entries)]
        return MatrixExpr(self.rows, self.cols, entries, self.variables)

    def __add__(self, other: "MatrixExpr") -> "MatrixExpr":
        return self._elementwise(other, lambda a, b: a + b)

    def __sub__(self, other: "MatrixExpr") -> "MatrixExpr":
        return self._elementwise(other, lambda a, b: a - b)

    def __neg__(self) -> "MatrixExpr":
        return MatrixExpr(self.rows, self.cols, [-e for e in self.entries], self.variables)

    def congruence(self, middle) -> "MatrixExpr":
        """self · M · selfᵀ（M 为数值矩阵），用于 R(x) = G_R R̄ G_Rᵀ"""
        m = np.asarray(middle, dtype=float).reshape(self.cols, self.cols)
        return self @ MatrixExpr.from_array(m, self.variables) @ self.transpose()

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixExpr):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.shape, self.entries))

    def __repr__(self) -> str:
        return f"MatrixExpr({self.rows}x{self.cols}, {self.to_grid()})"
