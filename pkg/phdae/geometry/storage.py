"""
储能关系：T*X 中拉格朗日子流形的三种局部表示

- ExplicitHamiltonian: L = graph ∇H
- GeneratingFunction:  e_I = ∂V/∂x_I,  x_J = −∂V/∂e_J,  V = V(x_I, e_J)
- MorseFamily:         ∂F/∂λ(x, λ) = 0,  e = ∂F/∂x(x, λ)
"""

from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Sequence, Union

import numpy as np

from phdae.errors import DimensionMismatch
from phdae.expr import ExprTree
from phdae.legendre import effective_hamiltonian_tree

COSTATE_PREFIX = "e_"
MULTIPLIER_PREFIX = "lam"


def costate_name(state_name: str) -> str:
    """状态变量对应的共态（effort）变量名"""
    return f"{COSTATE_PREFIX}{state_name}"


def multiplier_names(k: int, taken: Sequence[str] = ()) -> list[str]:
    """选 k 个未被占用的 lam<i> 名字（下标从小到大）"""
    names: list[str] = []
    used = set(taken)
    i = 1
    while len(names) < k:
        candidate = f"{MULTIPLIER_PREFIX}{i}"
        if candidate not in used:
            names.append(candidate)
        i += 1
    return names


@dataclass(frozen=True)
class ExplicitHamiltonian:
    """显式哈密顿量 H(x)"""
    H: ExprTree
    kind: ClassVar[str] = "hamiltonian"

    @property
    def state_names(self) -> tuple[str, ...]:
        return self.H.variables

    @property
    def n(self) -> int:
        return self.H.size

    def effort(self, x) -> np.ndarray:
        return self.H.gradient(x)

    def energy(self, x) -> float:
        return self.H.evaluate(x)


@dataclass(frozen=True)
class GeneratingFunction:
    """
    生成函数 V(x_I, e_J)

    V 的变量表固定为 [x_I 的名字..., e_<x_J 的名字>...]；I、J 是 0 起的状态下标。
    """
    V: ExprTree
    I: tuple[int, ...]
    J: tuple[int, ...]
    state_names: tuple[str, ...]
    kind: ClassVar[str] = "generating"

    def __post_init__(self):
        n = len(self.state_names)
        if sorted(self.I + self.J) != list(range(n)):
            raise DimensionMismatch(f"I={list(self.I)} 与 J={list(self.J)} 不构成 {{0..{n - 1}}} 的划分")
        expected = tuple(self.chart_names(self.state_names, self.I, self.J))
        if self.V.variables != expected:
            raise DimensionMismatch(f"V 的变量表应为 {list(expected)}，得到 {list(self.V.variables)}")

    @staticmethod
    def chart_names(state_names: Sequence[str], I: Sequence[int], J: Sequence[int]) -> list[str]:
        return [state_names[i] for i in I] + [costate_name(state_names[j]) for j in J]

    @classmethod
    def from_source(
        cls, src: str, I: Sequence[int], J: Sequence[int], state_names: Sequence[str]
    ) -> "GeneratingFunction":
        I, J, names = tuple(I), tuple(J), tuple(state_names)
        V = ExprTree.parse(src, cls.chart_names(names, I, J))
        return cls(V=V, I=I, J=J, state_names=names)

    @property
    def n(self) -> int:
        return len(self.state_names)

    @property
    def costate_indices(self) -> range:
        """V 变量表中 e_J 的位置"""
        return range(len(self.I), self.n)

    def split(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        return z[: len(self.I)], z[len(self.I):]

    def chart_point(self, x_I, e_J) -> np.ndarray:
        return np.concatenate([np.asarray(x_I, dtype=float), np.asarray(e_J, dtype=float)])

    def state_from_chart(self, z) -> np.ndarray:
        """z = (x_I, e_J) ↦ x，其中 x_J = −∂V/∂e_J"""
        grad = self.V.gradient(z)
        x = np.zeros(self.n)
        x[list(self.I)] = np.asarray(z, dtype=float)[: len(self.I)]
        x[list(self.J)] = -grad[len(self.I):]
        return x

    def effort_from_chart(self, z) -> np.ndarray:
        """z = (x_I, e_J) ↦ e，其中 e_I = ∂V/∂x_I"""
        grad = self.V.gradient(z)
        e = np.zeros(self.n)
        e[list(self.I)] = grad[: len(self.I)]
        e[list(self.J)] = np.asarray(z, dtype=float)[len(self.I):]
        return e

    def chart_from_pair(self, x, e) -> np.ndarray:
        """(x, e) ↦ z = (x_I, e_J)"""
        x = np.asarray(x, dtype=float)
        e = np.asarray(e, dtype=float)
        return self.chart_point(x[list(self.I)], e[list(self.J)])

    @cached_property
    def effective_hamiltonian(self) -> ExprTree:
        """H̃ = V − e_Jᵀ ∂V/∂e_J"""
        return effective_hamiltonian_tree(self.V, len(self.J))

    def energy(self, z) -> float:
        return self.effective_hamiltonian.evaluate(z)


@dataclass(frozen=True)
class MorseFamily:
    """Morse 族 F(x, λ)，F 的变量表 = 状态名 + 参数名"""
    F: ExprTree
    k: int
    state_names: tuple[str, ...]
    param_names: tuple[str, ...]
    kind: ClassVar[str] = "morse"

    def __post_init__(self):
        if len(self.param_names) != self.k:
            raise DimensionMismatch(f"参数名个数 {len(self.param_names)} ≠ k = {self.k}")
        expected = tuple(self.state_names) + tuple(self.param_names)
        if self.F.variables != expected:
            raise DimensionMismatch(f"F 的变量表应为 {list(expected)}，得到 {list(self.F.variables)}")

    @classmethod
    def from_source(
        cls, src: str, k: int, state_names: Sequence[str], param_names: Sequence[str] = ()
    ) -> "MorseFamily":
        names = tuple(state_names)
        params = tuple(param_names) or tuple(multiplier_names(k, names))
        return cls(F=ExprTree.parse(src, names + params), k=k, state_names=names, param_names=params)

    @property
    def n(self) -> int:
        return len(self.state_names)

    def joint(self, x, lam) -> np.ndarray:
        return np.concatenate([np.asarray(x, dtype=float), np.asarray(lam, dtype=float)])

    def stationarity(self, y) -> np.ndarray:
        """∂F/∂λ 在 y = (x, λ) 处的值"""
        return np.array([self.F.derivative(self.n + a).evaluate(y) for a in range(self.k)])

    def rank_block(self, y) -> np.ndarray:
        """k × (n + k) 的二阶偏导块 ∂²F/∂λ∂(x, λ)"""
        return self.F.hessian(y)[self.n:, :]

    def effort(self, y) -> np.ndarray:
        """∂F/∂x 在 y = (x, λ) 处的值"""
        return np.array([self.F.derivative(i).evaluate(y) for i in range(self.n)])

    def energy(self, y) -> float:
        return self.F.evaluate(y)


StorageRelation = Union[ExplicitHamiltonian, GeneratingFunction, MorseFamily]
