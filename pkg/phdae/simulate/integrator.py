"""
隐式中点法：相容初值、单步与整段仿真

单步未知量 (z₁, w₁, λ*)，残差
    R1 = X(z₁) − X(z₀) − h·[A e + B λ* + G u](中点)
    R2 = ∂F/∂λ(z₁, w₁)                     （仅 Morse 族）
    R3 = Bᵀ(x₁) e(z₁, w₁)                   （约束在步末强制）
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from phdae.errors import (
    ChartBreakdown,
    DimensionMismatch,
    IndexViolation,
    NoConvergence,
    PhdaeError,
    SingularJacobian,
)
from phdae.numerics import (
    NewtonConfig,
    inf_norm,
    newton_solve,
    project_onto_constraints,
)
from phdae.system import PHSystem

from .config import SimConfig, evaluate_inputs
from .formulation import (
    INDEX_THRESHOLD,
    Formulation,
    GeneratingFormulation,
    InitialState,
    formulation_for,
)
from .trajectory import Trajectory, TrajectoryRecorder

logger = logging.getLogger(__name__)

InputFn = Callable[[float], np.ndarray]


# =============================================================================
# 相容初值
# =============================================================================


def _pad_guess(sys: PHSystem, x_guess) -> np.ndarray:
    x = np.asarray(x_guess, dtype=float).ravel()
    if x.size > sys.n:
        raise DimensionMismatch(f"初值长度 {x.size} 超过状态维数 {sys.n}")
    return np.concatenate([x, np.zeros(sys.n - x.size)])


def _init_joint(form: Formulation, z0: np.ndarray, w0: np.ndarray, cfg: NewtonConfig) -> InitialState:
    """显式储能与 Morse 族：在 (x, w) 上投影到 {∂F/∂λ = 0, Bᵀe = 0}"""
    n = form.n

    def constraint(y: np.ndarray) -> np.ndarray:
        z, w = form.split(y)
        return np.concatenate([form.params(z, w), form.dyn.constraint(z, form.effort(z, w))])

    def jacobian(y: np.ndarray) -> np.ndarray:
        z, w = form.split(y)
        e = form.effort(z, w)
        E_z, E_w = form.effort_jac(z, w)
        C_z, C_w = form.params_jac(z, w)
        Bt = form.dyn.B.evaluate(z).T
        top = np.hstack([C_z, C_w])
        bottom = np.hstack([form.dyn.constraint_x(z, e) + Bt @ E_z, Bt @ E_w])
        return np.vstack([top, bottom]).reshape(form.n_w + form.k, n + form.n_w)

    result = project_onto_constraints(constraint, jacobian, np.concatenate([z0, w0]), cfg)
    z, w = form.split(result.x)
    return InitialState(coords=z, params=w, state=z.copy(), multipliers=np.zeros(form.k))


def _init_generating(
    form: GeneratingFormulation, x_guess: np.ndarray, u0: np.ndarray, cfg: NewtonConfig
) -> InitialState:
    """
    生成函数：在 (x, e_J[, λ*]) 上投影

    约束 = 拉格朗日关系 x_J + ∂V/∂e_J = 0、Dirac 约束 Bᵀe = 0，
    以及驻定行的隐藏约束 ẋ_j + Σ_p ∂²V/∂e_j∂x_p · ẋ_p = 0
    （驻定行的 ∂V/∂e_j 只含 x_I，对时间求导即得）。
    """
    storage = form.storage
    dyn = form.dyn
    n, m, n_J = form.n, form.m, len(form.J)
    hidden = list(zip(form.stationary_positions, form.stationary_states))
    n_lam = form.k if hidden else 0
    size = n + n_J + n_lam
    chart, _ = form.initial_anchor(x_guess)

    # ∂z/∂y：z = (x_I, e_J)
    Z = np.zeros((n, size))
    for p, i in enumerate(form.I):
        Z[p, i] = 1.0
    for q in range(n_J):
        Z[m + q, n + q] = 1.0
    # 驻定行的链式系数 a_p = ∂²V/∂e_j∂x_p 及其梯度
    mixed = [[storage.V.derivative(m + q).derivative(p) for p in range(m)] for q, _ in hidden]

    def unpack(y: np.ndarray):
        x = y[:n]
        z = storage.chart_point(x[form.I], y[n:n + n_J])
        lam = y[n + n_J:] if n_lam else np.zeros(form.k)
        return x, z, lam

    def constraint(y: np.ndarray) -> np.ndarray:
        x, z, lam = unpack(y)
        grad = storage.V.gradient(z)
        e = storage.effort_from_chart(z)
        parts = [x[form.J] + grad[m:], dyn.constraint(x, e)]
        if hidden:
            rhs = dyn.rhs(x, e, lam, u0)
            rows = []
            for (_, j), coeffs in zip(hidden, mixed):
                rows.append(rhs[j] + sum(a.evaluate(z) * rhs[i] for a, i in zip(coeffs, form.I)))
            parts.append(np.array(rows))
        return np.concatenate(parts)

    def jacobian(y: np.ndarray) -> np.ndarray:
        x, z, lam = unpack(y)
        e = storage.effort_from_chart(z)
        E, _ = form.effort_jac(z, np.zeros(0))
        Hv = storage.V.hessian(z)

        lagrange = Hv[m:, :] @ Z
        lagrange[:, form.J] += np.eye(n_J)
        dirac = dyn.B.evaluate(x).T @ E @ Z
        dirac[:, :n] += dyn.constraint_x(x, e)
        blocks = [lagrange, dirac]

        if hidden:
            rhs = dyn.rhs(x, e, lam, u0)
            d_rhs = dyn.A.evaluate(x) @ E @ Z
            d_rhs[:, :n] += dyn.rhs_x(x, e, lam, u0)
            d_rhs[:, n + n_J:] += dyn.B.evaluate(x)
            rows = []
            for (_, j), coeffs in zip(hidden, mixed):
                row = d_rhs[j].copy()
                for a, i in zip(coeffs, form.I):
                    row += a.evaluate(z) * d_rhs[i] + rhs[i] * (a.gradient(z) @ Z)
                rows.append(row)
            blocks.append(np.array(rows))
        return np.vstack(blocks).reshape(-1, size)

    anchor = np.concatenate([x_guess, chart[m:], np.zeros(n_lam)])
    result = project_onto_constraints(constraint, jacobian, anchor, cfg)
    x, z, lam = unpack(result.x)
    return InitialState(coords=z, params=np.zeros(0), state=form.state(z), multipliers=lam)


def consistent_init(
    sys: PHSystem,
    x_guess,
    t0: float = 0.0,
    inputs: Optional[InputFn] = None,
    cfg: Optional[NewtonConfig] = None,
) -> InitialState:
    """
    离 x_guess 最近的相容初值 min ‖x − x_guess‖² s.t. g(x) = 0

    x_guess 可以比状态短，缺的分量按 0 猜测。拉格朗日约束下同时求出
    相容的内部坐标（e_J 或 λ）。

    Raises:
        NoConvergence: 投影不收敛
    """
    cfg = cfg or NewtonConfig.from_settings()
    form = formulation_for(sys)
    x_guess = _pad_guess(sys, x_guess)
    u0 = inputs(t0) if inputs is not None else np.zeros(sys.m_P)
    if isinstance(form, GeneratingFormulation):
        state = _init_generating(form, x_guess, u0, cfg)
    else:
        z0, w0 = form.initial_anchor(x_guess)
        state = _init_joint(form, z0, w0, cfg)
    logger.debug("相容初值 %s（猜测 %s）", state.state.tolist(), x_guess.tolist())
    return state


# =============================================================================
# 单步
# =============================================================================


@dataclass
class StepResult:
    coords: np.ndarray
    params: np.ndarray
    multipliers: np.ndarray
    state: np.ndarray
    state_mid: np.ndarray
    effort_mid: np.ndarray
    inputs_mid: np.ndarray
    constraint_residual: float
    iterations: int
    sigma: float


class MidpointStepper:
    """固定系统上的隐式中点单步"""

    def __init__(
        self,
        sys: PHSystem,
        inputs: Optional[InputFn] = None,
        newton: Optional[NewtonConfig] = None,
        check_index: bool = True,
    ):
        self.sys = sys
        self.form = formulation_for(sys)
        self.inputs = inputs or (lambda t: np.zeros(sys.m_P))
        self.newton = newton or NewtonConfig.from_settings()
        self.check_index = check_index

    def _unpack(self, U: np.ndarray):
        f = self.form
        return U[: f.n], U[f.n: f.n + f.n_w], U[f.n + f.n_w:]

    def step(self, z0, w0, lam0, t: float, h: float) -> StepResult:
        f = self.form
        dyn = f.dyn
        z0 = np.asarray(z0, dtype=float)
        w0 = np.asarray(w0, dtype=float)
        x0 = f.state(z0)
        u_m = self.inputs(t + 0.5 * h)
        d = f.weights

        def residual(U: np.ndarray) -> np.ndarray:
            z1, w1, lam = self._unpack(U)
            z_m, w_m = f.midpoint(z0, z1), 0.5 * (w0 + w1)
            x_m = f.state(z_m)
            e_m = f.effort(z_m, w_m)
            r1 = f.state(z1) - x0 - h * dyn.rhs(x_m, e_m, lam, u_m)
            r2 = f.params(z1, w1)
            r3 = dyn.constraint(f.state(z1), f.effort(z1, w1))
            return np.concatenate([r1, r2, r3])

        def jacobian(U: np.ndarray) -> np.ndarray:
            z1, w1, lam = self._unpack(U)
            z_m, w_m = f.midpoint(z0, z1), 0.5 * (w0 + w1)
            x_m = f.state(z_m)
            e_m = f.effort(z_m, w_m)
            M_m = f.state_jac(z_m)
            Ez_m, Ew_m = f.effort_jac(z_m, w_m)
            A_m = dyn.A.evaluate(x_m)
            B_m = dyn.B.evaluate(x_m)
            rx = dyn.rhs_x(x_m, e_m, lam, u_m)

            x1 = f.state(z1)
            e1 = f.effort(z1, w1)
            M1 = f.state_jac(z1)
            Ez1, Ew1 = f.effort_jac(z1, w1)
            Cz, Cw = f.params_jac(z1, w1)
            B1t = dyn.B.evaluate(x1).T

            row1 = np.hstack([
                M1 - h * (rx @ M_m + A_m @ Ez_m) * d[None, :],
                -0.5 * h * A_m @ Ew_m,
                -h * B_m,
            ])
            row2 = np.hstack([Cz, Cw, np.zeros((f.n_w, f.k))])
            row3 = np.hstack([dyn.constraint_x(x1, e1) @ M1 + B1t @ Ez1, B1t @ Ew1, np.zeros((f.k, f.k))])
            size = f.n + f.n_w + f.k
            return np.vstack([row1, row2, row3]).reshape(size, size)

        U0 = np.concatenate([z0, w0, np.asarray(lam0, dtype=float)])
        try:
            result = newton_solve(residual, jacobian, U0, self.newton)
        except NoConvergence as exc:
            self._diagnose(z0, w0, t)
            if isinstance(f, GeneratingFormulation) and isinstance(exc, SingularJacobian):
                raise ChartBreakdown(f"t = {t:.6g} 处坐标卡 (x_I, e_J) 退化: {exc}") from exc
            raise

        z1, w1, lam = self._unpack(result.x)
        z_m, w_m = f.midpoint(z0, z1), 0.5 * (w0 + w1)
        sigma = float("nan")
        if self.check_index:
            sigma = f.index_sigma(z_m, w_m)
            if sigma < INDEX_THRESHOLD:
                raise IndexViolation(
                    f"t = {t + 0.5 * h:.6g} 处指标块最小奇异值 {sigma:.3e} < {INDEX_THRESHOLD:g}",
                    sigma_min=sigma,
                    time=t + 0.5 * h,
                )
        x1 = f.state(z1)
        constraint = np.concatenate([f.params(z1, w1), dyn.constraint(x1, f.effort(z1, w1))])
        return StepResult(
            coords=z1,
            params=w1,
            multipliers=lam,
            state=x1,
            state_mid=f.state(z_m),
            effort_mid=f.effort(z_m, w_m),
            inputs_mid=u_m,
            constraint_residual=inf_norm(constraint),
            iterations=result.iterations,
            sigma=sigma,
        )

    def _diagnose(self, z0, w0, t: float) -> None:
        """Newton 失败时，若当前点的指标块已退化则改报 IndexViolation"""
        if not self.check_index:
            return
        try:
            sigma = self.form.index_sigma(z0, w0)
        except PhdaeError:
            return
        if sigma < INDEX_THRESHOLD:
            raise IndexViolation(
                f"t = {t:.6g} 处指标块最小奇异值 {sigma:.3e} < {INDEX_THRESHOLD:g}",
                sigma_min=sigma,
                time=t,
            )


def step(
    sys: PHSystem,
    coords,
    t: float,
    dt: float,
    u=None,
    params=None,
    multipliers=None,
    newton: Optional[NewtonConfig] = None,
) -> StepResult:
    """
    单个隐式中点步（输入 u 在步内取常值）

    coords 为仿真坐标：显式储能与 Morse 族为 x，生成函数为 (x_I, e_J)。
    """
    u_vec = np.zeros(sys.m_P) if u is None else np.asarray(u, dtype=float)
    stepper = MidpointStepper(sys, inputs=lambda _t: u_vec, newton=newton)
    w0 = np.zeros(stepper.form.n_w) if params is None else params
    lam0 = np.zeros(sys.k) if multipliers is None else multipliers
    return stepper.step(coords, w0, lam0, t, dt)


# =============================================================================
# 整段仿真
# =============================================================================


def simulate(sys: PHSystem, x_guess, cfg: Optional[SimConfig] = None) -> Trajectory:
    """
    相容初始化后逐步推进

    失败时返回到失败点为止的轨迹，failure 字段记录原因；
    初始化失败则直接抛出。
    """
    cfg = cfg or SimConfig()
    trees = cfg.input_trees(sys.m_P)
    inputs: InputFn = lambda t: evaluate_inputs(trees, t)
    grid = cfg.grid()

    init = consistent_init(sys, x_guess, t0=cfg.t0, inputs=inputs, cfg=cfg.newton)
    stepper = MidpointStepper(sys, inputs=inputs, newton=cfg.newton, check_index=cfg.check_index)
    form = stepper.form
    recorder = TrajectoryRecorder(
        state_names=tuple(sys.state_names),
        coordinate_names=tuple(form.coordinate_names),
        k=sys.k,
    )

    z, w, lam = init.coords, init.params, init.multipliers
    energy = form.energy(z, w)
    e0 = form.effort(z, w)
    u0 = inputs(cfg.t0)
    supplied = dissipated = 0.0
    recorder.record(
        time=cfg.t0,
        state=init.state,
        coords=np.concatenate([z, w]),
        multipliers=init.multipliers,
        energy=energy,
        constraint_residual=inf_norm(np.concatenate([form.params(z, w), form.dyn.constraint(init.state, e0)])),
        power_balance_residual=0.0,
        port_power=sys.port_power(init.state, e0, u0),
        dissipated_power=sys.dissipated_power(init.state, e0),
        supplied_energy=0.0,
        dissipated_energy=0.0,
        index_sigma=form.index_sigma(z, w) if cfg.check_index else np.nan,
    )

    failure: Optional[str] = None
    last = len(grid) - 1
    for i in range(last):
        t, h = grid[i], grid[i + 1] - grid[i]
        try:
            result = stepper.step(z, w, lam, t, h)
        except PhdaeError as exc:
            failure = f"t = {t:.6g}: {type(exc).__name__}: {exc}"
            logger.warning("仿真在第 %d 步失败: %s", i + 1, failure)
            break
        if i == 0:
            recorder.set_first_multipliers(result.multipliers)

        new_energy = form.energy(result.coords, result.params)
        port = sys.port_power(result.state_mid, result.effort_mid, result.inputs_mid)
        loss = sys.dissipated_power(result.state_mid, result.effort_mid)
        supplied += h * port
        dissipated += h * loss
        balance = (new_energy - energy) / h - (port - loss)
        z, w, lam, energy = result.coords, result.params, result.multipliers, new_energy

        if (i + 1) % cfg.output_every == 0 or i + 1 == last:
            recorder.record(
                time=grid[i + 1],
                state=result.state,
                coords=np.concatenate([z, w]),
                multipliers=lam,
                energy=energy,
                constraint_residual=result.constraint_residual,
                power_balance_residual=balance,
                port_power=port,
                dissipated_power=loss,
                supplied_energy=supplied,
                dissipated_energy=dissipated,
                index_sigma=result.sigma,
            )

    traj = recorder.build(failure)
    logger.info("仿真结束: %d 行，%s", len(traj), "完成" if failure is None else "中途失败")
    return traj
