"""
表达式树节点

节点都是不可变的 frozen dataclass，可以哈希、可以直接比较结构。
构造时统一走下面的 smart constructor（add / mul / ...），
它们只做常量折叠和 0、1 的恒等折叠，不做一般的代数化简。
"""

import math
from dataclasses import dataclass
from typing import Callable

# 支持的一元函数
FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "tanh")

# 打印优先级
PREC_ADD = 1
PREC_MUL = 2
PREC_UNARY = 3
PREC_POW = 4
PREC_ATOM = 5


class Node:
    """表达式节点基类"""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    """常量"""
    value: float


@dataclass(frozen=True)
class Var(Node):
    """变量引用（按声明变量表中的下标）"""
    index: int
    name: str


@dataclass(frozen=True)
class Unary(Node):
    """一元运算：neg 或 FUNCTIONS 中的函数"""
    func: str
    arg: Node


@dataclass(frozen=True)
class Binary(Node):
    """二元运算：+ - * / ^（^ 的右侧总是 Const）"""
    op: str
    left: Node
    right: Node


ZERO = Const(0.0)
ONE = Const(1.0)


# =============================================================================
# 数值内核（供折叠和编译求值共用）
# =============================================================================


def _pow(base: float, exponent: float) -> float:
    if float(exponent).is_integer():
        return base ** int(exponent)
    return math.pow(base, exponent)


def _ln(v: float) -> float:
    return math.log(v)


UNARY_KERNELS: dict[str, Callable[[float], float]] = {
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": _ln,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
}

BINARY_KERNELS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _pow,
}

# 求值时可能抛出的底层异常
NUMERIC_FAILURES = (ValueError, ZeroDivisionError, OverflowError)


def _try_fold(kernel, *args) -> Node | None:
    """尝试对常量做折叠，落在定义域外时保留原节点（留到求值时报错）"""
    try:
        value = kernel(*args)
    except NUMERIC_FAILURES:
        return None
    if not math.isfinite(value):
        return None
    return Const(float(value))


def is_const(node: Node, value: float | None = None) -> bool:
    """是否为常量节点（可指定具体值）"""
    if not isinstance(node, Const):
        return False
    return value is None or node.value == value


# =============================================================================
# Smart constructors
# =============================================================================


def const(value: float) -> Const:
    return Const(float(value))


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.func == "neg":
        return a.arg
    return Unary("neg", a)


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _try_fold(BINARY_KERNELS["+"], a.value, b.value) or Binary("+", a, b)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    if isinstance(b, Unary) and b.func == "neg":
        return sub(a, b.arg)
    if isinstance(b, Const) and b.value < 0:
        return Binary("-", a, Const(-b.value))
    return Binary("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _try_fold(BINARY_KERNELS["-"], a.value, b.value) or Binary("-", a, b)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    if isinstance(b, Unary) and b.func == "neg":
        return add(a, b.arg)
    if isinstance(b, Const) and b.value < 0:
        return Binary("+", a, Const(-b.value))
    return Binary("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _try_fold(BINARY_KERNELS["*"], a.value, b.value) or Binary("*", a, b)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    return Binary("*", a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _try_fold(BINARY_KERNELS["/"], a.value, b.value) or Binary("/", a, b)
    if is_const(b, 1.0):
        return a
    if is_const(a, 0.0) and not isinstance(b, Const):
        return ZERO
    return Binary("/", a, b)


def power(a: Node, exponent: float) -> Node:
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return a
    if isinstance(a, Const):
        return _try_fold(_pow, a.value, exponent) or Binary("^", a, Const(exponent))
    return Binary("^", a, Const(exponent))


def func(name: str, a: Node) -> Node:
    if name not in FUNCTIONS:
        raise ValueError(f"不支持的函数: {name}")
    if isinstance(a, Const):
        return _try_fold(UNARY_KERNELS[name], a.value) or Unary(name, a)
    return Unary(name, a)


# =============================================================================
# 结构求导
# =============================================================================


def differentiate(node: Node, index: int) -> Node:
    """对第 index 个变量求偏导，返回新的节点（已折叠）"""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == index else ZERO
    if isinstance(node, Unary):
        d = differentiate(node.arg, index)
        if is_const(d, 0.0):
            return ZERO
        a = node.arg
        if node.func == "neg":
            return neg(d)
        if node.func == "sin":
            return mul(func("cos", a), d)
        if node.func == "cos":
            return neg(mul(func("sin", a), d))
        if node.func == "exp":
            return mul(node, d)
        if node.func == "ln":
            return div(d, a)
        if node.func == "sqrt":
            return div(d, mul(Const(2.0), node))
        if node.func == "tanh":
            return mul(sub(ONE, power(node, 2.0)), d)
        raise ValueError(f"未知的一元运算: {node.func}")
    if isinstance(node, Binary):
        l, r = node.left, node.right
        if node.op == "^":
            dl = differentiate(l, index)
            c = r.value
            return mul(mul(Const(c), power(l, c - 1.0)), dl)
        dl = differentiate(l, index)
        dr = differentiate(r, index)
        if node.op == "+":
            return add(dl, dr)
        if node.op == "-":
            return sub(dl, dr)
        if node.op == "*":
            return add(mul(dl, r), mul(l, dr))
        if node.op == "/":
            if is_const(dr, 0.0):
                return div(dl, r)
            return div(sub(mul(dl, r), mul(l, dr)), power(r, 2.0))
        raise ValueError(f"未知的二元运算: {node.op}")
    raise TypeError(f"不是表达式节点: {node!r}")


# =============================================================================
# 遍历 / 替换 / 编译
# =============================================================================


def free_indices(node: Node) -> frozenset[int]:
    """节点中出现的变量下标"""
    if isinstance(node, Var):
        return frozenset((node.index,))
    if isinstance(node, Unary):
        return free_indices(node.arg)
    if isinstance(node, Binary):
        return free_indices(node.left) | free_indices(node.right)
    return frozenset()


def substitute(node: Node, replace: Callable[[Var], Node]) -> Node:
    """把每个 Var 交给 replace 处理，并用 smart constructor 重建"""
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        return replace(node)
    if isinstance(node, Unary):
        arg = substitute(node.arg, replace)
        return neg(arg) if node.func == "neg" else func(node.func, arg)
    if isinstance(node, Binary):
        left = substitute(node.left, replace)
        if node.op == "^":
            return power(left, node.right.value)
        right = substitute(node.right, replace)
        return {"+": add, "-": sub, "*": mul, "/": div}[node.op](left, right)
    raise TypeError(f"不是表达式节点: {node!r}")


def compile_node(node: Node) -> Callable[[list[float]], float]:
    """把节点编译成嵌套闭包，避免每次求值都做类型分派"""
    if isinstance(node, Const):
        value = node.value
        return lambda p: value
    if isinstance(node, Var):
        index = node.index
        return lambda p: p[index]
    if isinstance(node, Unary):
        kernel = UNARY_KERNELS[node.func]
        inner = compile_node(node.arg)
        return lambda p: kernel(inner(p))
    if isinstance(node, Binary):
        left = compile_node(node.left)
        if node.op == "^":
            exponent = node.right.value
            if exponent.is_integer():
                k = int(exponent)
                return lambda p: left(p) ** k
            return lambda p: math.pow(left(p), exponent)
        right = compile_node(node.right)
        kernel = BINARY_KERNELS[node.op]
        return lambda p: kernel(left(p), right(p))
    raise TypeError(f"不是表达式节点: {node!r}")


# =============================================================================
# 打印
# =============================================================================


def format_number(value: float) -> str:
    """最短的可回读十进制表示"""
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def precedence(node: Node) -> int:
    if isinstance(node, Const):
        return PREC_UNARY if node.value < 0 else PREC_ATOM
    if isinstance(node, Var):
        return PREC_ATOM
    if isinstance(node, Unary):
        return PREC_UNARY if node.func == "neg" else PREC_ATOM
    if node.op in ("+", "-"):
        return PREC_ADD
    if node.op in ("*", "/"):
        return PREC_MUL
    return PREC_POW


def _wrap(node: Node, needs_parens: bool) -> str:
    text = to_source(node)
    return f"({text})" if needs_parens else text


def to_source(node: Node) -> str:
    """打印成语法中的源码；parse(to_source(n)) 与 n 结构相同"""
    if isinstance(node, Const):
        if node.value < 0:
            return "-" + format_number(-node.value)
        return format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.func == "neg":
            return "-" + _wrap(node.arg, precedence(node.arg) < PREC_UNARY)
        return f"{node.func}({to_source(node.arg)})"
    p = precedence(node)
    if node.op == "^":
        base = _wrap(node.left, precedence(node.left) <= PREC_POW)
        exponent = node.right.value
        exp_text = format_number(exponent)
        if exponent < 0:
            exp_text = f"({exp_text})"
        return f"{base}^{exp_text}"
    left = _wrap(node.left, precedence(node.left) < p)
    right = _wrap(node.right, precedence(node.right) <= p)
    if p == PREC_ADD:
        return f"{left} {node.op} {right}"
    return f"{left}{node.op}{right}"
