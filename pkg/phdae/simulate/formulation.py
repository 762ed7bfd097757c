"""
仿真坐标下的系统描述

坐标 z（n 维）+ 代数参数 w（Morse 族的 λ，其余为空）：
- 显式哈密顿量: z = x,            e = ∇H(x)
- 生成函数:     z = (x_I, e_J),   x_J = −∂V/∂e_J,  e_I = ∂V/∂x_I
- Morse 族:     z = x, w = λ,     e = ∂F/∂x,  约束 ∂F/∂λ = 0

动力学统一写成 d/dt X(z) = A(x) e + B(x) λ* + G(x) u，A = J − G_R R̄ G_Rᵀ。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from phdae.errors import DomainError, Inconclusive, RankDeficientConstraint
from phdae.expr import MatrixExpr
from phdae.geometry import ExplicitHamiltonian, GeneratingFunction, lagrange_constraint_probe
from phdae.numerics import matrix_rank, min_singular_value
from phdae.system import PHSystem, stationary_rows

INDEX_THRESHOLD = 1e-8


def directional(m: MatrixExpr, x, v) -> np.ndarray:
    """第 j 列为 (∂M/∂x_j)(x) · v"""
    n = len(m.variables)
    out = np.zeros((m.rows, n))
    if m.is_constant or m.rows == 0 or m.cols == 0:
        return out
    v = np.asarray(v, dtype=float)
    for j in range(n):
        d = m.derivative(j)
        if not d.is_constant:
            out[:, j] = d.evaluate(x) @ v
    return out


class Dynamics:
    """右端 A e + B λ* + G u 及其对 x 的偏导"""

    def __init__(self, sys: PHSystem):
        self.A = sys.structure_matrix()
        self.B = sys.dirac.B
        self.Bt = self.B.transpose()
        self.G = sys.dirac.G

    def rhs(self, x, e, lam, u) -> np.ndarray:
        return self.A.evaluate(x) @ e + self.B.evaluate(x) @ lam + self.G.evaluate(x) @ u

    def rhs_x(self, x, e, lam, u) -> np.ndarray:
        return directional(self.A, x, e) + directional(self.B, x, lam) + directional(self.G, x, u)

    def constraint(self, x, e) -> np.ndarray:
        return self.B.evaluate(x).T @ e

    def constraint_x(self, x, e) -> np.ndarray:
        return directional(self.Bt, x, e)


@dataclass
class InitialState:
    """相容初值：坐标 z、参数 w、状态 x、乘子初猜"""
    coords: np.ndarray
    params: np.ndarray
    state: np.ndarray
    multipliers: np.ndarray


class Formulation:
    """显式哈密顿量的坐标（z = x），也是其余两种的基类"""

    kind = "hamiltonian"

    def __init__(self, sys: PHSystem):
        self.sys = sys
        self.dyn = Dynamics(sys)
        self.n = sys.n
        self.k = sys.k
        self.n_w = 0
        self.stationary = np.zeros(self.n, dtype=bool)

    @property
    def coordinate_names(self) -> list[str]:
        return list(self.sys.state_names)

    @property
    def weights(self) -> np.ndarray:
        """中点对新值的权重：驻定坐标取新值，其余取平均"""
        return np.where(self.stationary, 1.0, 0.5)

    def midpoint(self, z0, z1) -> np.ndarray:
        return np.where(self.stationary, z1, 0.5 * (z0 + z1))

    def split(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        return y[: self.n], y[self.n: self.n + self.n_w]

    # ---- 坐标映射（子类覆盖）

    def state(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def state_jac(self, z) -> np.ndarray:
        return np.eye(self.n)

    def effort(self, z, w) -> np.ndarray:
        return self.sys.storage.H.gradient(z)

    def effort_jac(self, z, w) -> tuple[np.ndarray, np.ndarray]:
        return self.sys.storage.H.hessian(z), np.zeros((self.n, 0))

    def params(self, z, w) -> np.ndarray:
        return np.zeros(0)

    def params_jac(self, z, w) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros((0, self.n)), np.zeros((0, 0))

    def energy(self, z, w) -> float:
        return self.sys.storage.H.evaluate(z)

    # ---- 指标检查

    def _check_rank(self, B: np.ndarray, x) -> None:
        if self.k and matrix_rank(B) < self.k:
            raise RankDeficientConstraint(f"B(x) 在 {np.asarray(x).tolist()} 处列不满秩", point=np.asarray(x))

    def index_block(self, z, w) -> np.ndarray:
        """Bᵀ ∇²H B"""
        x = self.state(z)
        B = self.dyn.B.evaluate(x)
        self._check_rank(B, x)
        return B.T @ self.effort_jac(z, w)[0] @ B

    def index_sigma(self, z, w) -> float:
        return min_singular_value(self.index_block(z, w))

    # ---- 相容初值

    def initial_anchor(self, x_guess) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(x_guess, dtype=float), np.zeros(0)


class GeneratingFormulation(Formulation):
    """生成函数坐标卡 z = (x_I, e_J)"""

    kind = "generating"

    def __init__(self, sys: PHSystem):
        super().__init__(sys)
        storage: GeneratingFunction = sys.storage
        self.storage = storage
        self.m = len(storage.I)
        self.I = list(storage.I)
        self.J = list(storage.J)
        self.stationary_positions = stationary_rows(storage)
        self.stationary_states = [self.J[s] for s in self.stationary_positions]
        for s in self.stationary_positions:
            self.stationary[self.m + s] = True

    @property
    def coordinate_names(self) -> list[str]:
        return list(self.storage.V.variables)

    def state(self, z) -> np.ndarray:
        return self.storage.state_from_chart(z)

    def _charts(self, z) -> tuple[np.ndarray, np.ndarray]:
        """(∂X/∂z, ∂E/∂z)，都由 V 的 Hessian 给出"""
        Hv = self.storage.V.hessian(z)
        M = np.zeros((self.n, self.n))
        E = np.zeros((self.n, self.n))
        for p, i in enumerate(self.I):
            M[i, p] = 1.0
            E[i, :] = Hv[p, :]
        for q, j in enumerate(self.J):
            M[j, :] = -Hv[self.m + q, :]
            E[j, self.m + q] = 1.0
        return M, E

    def state_jac(self, z) -> np.ndarray:
        return self._charts(z)[0]

    def effort(self, z, w) -> np.ndarray:
        return self.storage.effort_from_chart(z)

    def effort_jac(self, z, w) -> tuple[np.ndarray, np.ndarray]:
        return self._charts(z)[1], np.zeros((self.n, 0))

    def energy(self, z, w) -> float:
        return self.storage.energy(z)

    def index_block(self, z, w) -> np.ndarray:
        """C Ĥ B_a：B_a = [B, A[:, S]]，C = [Bᵀ; A[S, :]]，Ĥ = (∂E/∂z)(∂X/∂z)⁺"""
        x = self.state(z)
        B = self.dyn.B.evaluate(x)
        self._check_rank(B, x)
        A = self.dyn.A.evaluate(x)
        S = self.stationary_states
        B_a = np.hstack([B, A[:, S]])
        C = np.vstack([B.T, A[S, :]])
        M, E = self._charts(z)
        return C @ (E @ np.linalg.pinv(M)) @ B_a

    def initial_anchor(self, x_guess) -> tuple[np.ndarray, np.ndarray]:
        x_guess = np.asarray(x_guess, dtype=float)
        try:
            probe = lagrange_constraint_probe(self.storage, x_guess)
            e_J = probe.witness if probe.feasible else np.zeros(len(self.J))
        except (Inconclusive, DomainError):
            e_J = np.zeros(len(self.J))
        return self.storage.chart_point(x_guess[self.I], e_J), np.zeros(0)


class MorseFormulation(Formulation):
    """Morse 族：z = x，w = λ 为每步的代数未知量"""

    kind = "morse"

    def __init__(self, sys: PHSystem):
        super().__init__(sys)
        self.storage = sys.storage
        self.n_w = self.storage.k

    @property
    def coordinate_names(self) -> list[str]:
        return list(self.storage.F.variables)

    def _joint(self, z, w) -> np.ndarray:
        return np.concatenate([np.asarray(z, dtype=float), np.asarray(w, dtype=float)])

    def effort(self, z, w) -> np.ndarray:
        return self.storage.F.gradient(self._joint(z, w))[: self.n]

    def effort_jac(self, z, w) -> tuple[np.ndarray, np.ndarray]:
        H = self.storage.F.hessian(self._joint(z, w))
        return H[: self.n, : self.n], H[: self.n, self.n:]

    def params(self, z, w) -> np.ndarray:
        return self.storage.F.gradient(self._joint(z, w))[self.n:]

    def params_jac(self, z, w) -> tuple[np.ndarray, np.ndarray]:
        H = self.storage.F.hessian(self._joint(z, w))
        return H[self.n:, : self.n], H[self.n:, self.n:]

    def energy(self, z, w) -> float:
        return self.storage.F.evaluate(self._joint(z, w))

    def index_block(self, z, w) -> np.ndarray:
        """Wᵀ ∇²F W，W = diag(B, I_k)"""
        B = self.dyn.B.evaluate(z)
        self._check_rank(B, z)
        W = np.zeros((self.n + self.n_w, self.k + self.n_w))
        W[: self.n, : self.k] = B
        W[self.n:, self.k:] = np.eye(self.n_w)
        return W.T @ self.storage.F.hessian(self._joint(z, w)) @ W

    def initial_anchor(self, x_guess) -> tuple[np.ndarray, np.ndarray]:
        x_guess = np.asarray(x_guess, dtype=float)
        try:
            probe = lagrange_constraint_probe(self.storage, x_guess)
            w = probe.witness if probe.feasible else np.zeros(self.n_w)
        except (Inconclusive, DomainError):
            w = np.zeros(self.n_w)
        return x_guess, np.asarray(w, dtype=float)


def formulation_for(sys: PHSystem) -> Formulation:
    if isinstance(sys.storage, ExplicitHamiltonian):
        return Formulation(sys)
    if isinstance(sys.storage, GeneratingFunction):
        return GeneratingFormulation(sys)
    return MorseFormulation(sys)


def index_check(sys: PHSystem, point, params: Optional[np.ndarray] = None) -> float:
    """
    指标块的最小奇异值（≥ 1e-8 时为 index-1；无约束时为 +inf）

    point 取仿真坐标：显式储能为 x，生成函数为 (x_I, e_J)，
    Morse 族为 x（params 给出 λ，也可直接传入 (x, λ) 联合点）。
    """
    form = formulation_for(sys)
    point = np.asarray(point, dtype=float)
    if params is None and point.size == form.n + form.n_w:
        z, w = form.split(point)
    else:
        z = point
        w = np.zeros(form.n_w) if params is None else np.asarray(params, dtype=float)
    return form.index_sigma(z, w)
