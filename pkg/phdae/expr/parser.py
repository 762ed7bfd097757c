"""
表达式解析器（递归下降）

语法:
    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | power
    power    := atom ('^' exponent)?
    exponent := '-'? atom            # 折叠后必须是常数
    atom     := number | ident | func '(' expr ')' | '(' expr ')'

'^' 比一元负号结合得更紧：-x^2 = -(x^2)。函数调用必须带括号。
"""

import re
from dataclasses import dataclass
from typing import Sequence

from phdae.errors import ExprSyntaxError, UnknownVariable

from . import nodes
from .nodes import Const, Node, Var

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number / ident / op / end
    text: str
    position: int


def tokenize(src: str) -> list[Token]:
    """切分 token，末尾追加 end"""
    tokens: list[Token] = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            raise ExprSyntaxError(pos, f"无法识别的字符 '{src[pos]}'")
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class Parser:
    """单次使用的解析器"""

    def __init__(self, src: str, variables: Sequence[str]):
        self.src = src
        self.tokens = tokenize(src)
        self.index = 0
        self.lookup = {name: i for i, name in enumerate(variables)}

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            raise ExprSyntaxError(self.current.position, f"期望 '{text}'，得到 {self._describe()}")

    def _describe(self) -> str:
        token = self.current
        return "输入结尾" if token.kind == "end" else f"'{token.text}'"

    def parse(self) -> Node:
        if self.current.kind == "end":
            raise ExprSyntaxError(0, "空表达式")
        node = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(self.current.position, f"多余的内容 {self._describe()}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self._accept("+"):
                node = nodes.add(node, self.term())
            elif self._accept("-"):
                node = nodes.sub(node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            if self._accept("*"):
                node = nodes.mul(node, self.factor())
            elif self._accept("/"):
                node = nodes.div(node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        if self._accept("-"):
            return nodes.neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if not self._accept("^"):
            return base
        position = self.current.position
        negative = self._accept("-")
        exponent = self.atom()
        if negative:
            exponent = nodes.neg(exponent)
        if not isinstance(exponent, Const):
            raise ExprSyntaxError(position, "指数必须是常数")
        return nodes.power(base, exponent.value)

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self._advance()
            return nodes.const(float(token.text))
        if token.kind == "ident":
            self._advance()
            if token.text in nodes.FUNCTIONS:
                if not (self.current.kind == "op" and self.current.text == "("):
                    raise ExprSyntaxError(self.current.position, f"函数 {token.text} 需要括号")
                self._advance()
                arg = self.expr()
                self._expect(")")
                return nodes.func(token.text, arg)
            if token.text not in self.lookup:
                raise UnknownVariable(token.text, token.position)
            return Var(self.lookup[token.text], token.text)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        raise ExprSyntaxError(token.position, f"意外的 {self._describe()}")


def parse_node(src: str, variables: Sequence[str]) -> Node:
    """把源码解析成节点（不做变量表校验）"""
    return Parser(src, variables).parse()
