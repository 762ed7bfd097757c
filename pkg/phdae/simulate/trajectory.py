"""
仿真轨迹与能量平衡诊断

每一行对应一个记录时刻；第 0 行的乘子取第一步的 λ*（第一步就失败时
取相容初值的乘子），第 0 行的功率平衡残差为 0。
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from phdae.errors import DimensionMismatch
from phdae.system import PHSystem


@dataclass(frozen=True)
class Trajectory:
    state_names: tuple[str, ...]
    coordinate_names: tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    coords: np.ndarray
    multipliers: np.ndarray
    energy: np.ndarray
    constraint_residual: np.ndarray
    power_balance_residual: np.ndarray
    port_power: np.ndarray
    dissipated_power: np.ndarray
    supplied_energy: np.ndarray
    dissipated_energy: np.ndarray
    index_sigma: np.ndarray
    failure: Optional[str] = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def k(self) -> int:
        return self.multipliers.shape[1]

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def column(self, name: str) -> np.ndarray:
        """按状态名取一列"""
        return self.states[:, self.state_names.index(name)]


@dataclass
class TrajectoryRecorder:
    """逐行累积，最后一次性生成不可变的 Trajectory"""
    state_names: tuple[str, ...]
    coordinate_names: tuple[str, ...]
    k: int
    rows: list[dict] = field(default_factory=list)

    def record(self, **row) -> None:
        self.rows.append(row)

    def set_first_multipliers(self, lam: np.ndarray) -> None:
        if self.rows:
            self.rows[0]["multipliers"] = np.asarray(lam, dtype=float)

    def build(self, failure: Optional[str] = None) -> Trajectory:
        def stack(key: str, width: Optional[int] = None) -> np.ndarray:
            values = [np.asarray(row[key], dtype=float) for row in self.rows]
            if width is not None:
                return np.array(values, dtype=float).reshape(len(values), width)
            return np.array(values, dtype=float)

        return Trajectory(
            state_names=self.state_names,
            coordinate_names=self.coordinate_names,
            times=stack("time"),
            states=stack("state", len(self.state_names)),
            coords=stack("coords", len(self.coordinate_names)),
            multipliers=stack("multipliers", self.k),
            energy=stack("energy"),
            constraint_residual=stack("constraint_residual"),
            power_balance_residual=stack("power_balance_residual"),
            port_power=stack("port_power"),
            dissipated_power=stack("dissipated_power"),
            supplied_energy=stack("supplied_energy"),
            dissipated_energy=stack("dissipated_energy"),
            index_sigma=stack("index_sigma"),
            failure=failure,
        )


@dataclass
class EnergyBalance:
    """
    max_balance_residual:    max |ΔE/Δt − (供给功率 − 耗散功率)|
    max_passivity_violation: max(ΔE/Δt − 供给功率, 0)
    energy_drift:            |E_N − E_0|
    """
    max_balance_residual: float
    max_passivity_violation: float
    energy_drift: float
    max_constraint_residual: float

    def passive(self, tolerance: float = 1e-8) -> bool:
        return self.max_passivity_violation <= tolerance


def energy_balance(traj: Trajectory, sys: Optional[PHSystem] = None) -> EnergyBalance:
    """
    由记录行之间的累计供给 / 耗散能量计算离散功率平衡

    轨迹行已带有逐步的供给与耗散能量；给出 sys 时只核对轨迹属于该系统。

    Raises:
        DimensionMismatch: sys 的状态名与轨迹不一致
    """
    if sys is not None and tuple(sys.state_names) != traj.state_names:
        raise DimensionMismatch(
            f"轨迹状态 {list(traj.state_names)} 与系统状态 {list(sys.state_names)} 不一致"
        )
    if len(traj) < 2:
        return EnergyBalance(0.0, 0.0, 0.0, float(np.max(traj.constraint_residual, initial=0.0)))
    dt = np.diff(traj.times)
    d_energy = np.diff(traj.energy) / dt
    supplied = np.diff(traj.supplied_energy) / dt
    dissipated = np.diff(traj.dissipated_energy) / dt
    return EnergyBalance(
        max_balance_residual=float(np.max(np.abs(d_energy - (supplied - dissipated)))),
        max_passivity_violation=float(np.max(np.maximum(d_energy - supplied, 0.0))),
        energy_drift=float(abs(traj.energy[-1] - traj.energy[0])),
        max_constraint_residual=float(np.max(traj.constraint_residual)),
    )


def csv_header(traj: Trajectory) -> list[str]:
    return (
        ["t"]
        + list(traj.state_names)
        + [f"lam_star_{i + 1}" for i in range(traj.k)]
        + ["energy", "constraint_residual", "power_balance_residual", "port_power"]
    )


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(traj: Trajectory, target: Union[str, Path, TextIO]) -> None:
    """按记录行写出 CSV（数值为 17 位有效数字，换行符固定为 \\n）"""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as f:
            _write_rows(traj, f)
    else:
        _write_rows(traj, target)


def _write_rows(traj: Trajectory, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(csv_header(traj))
    for i in range(len(traj)):
        row = (
            [traj.times[i]]
            + list(traj.states[i])
            + list(traj.multipliers[i])
            + [
                traj.energy[i],
                traj.constraint_residual[i],
                traj.power_balance_residual[i],
                traj.port_power[i],
            ]
        )
        writer.writerow([_fmt(v) for v in row])
