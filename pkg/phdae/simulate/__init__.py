"""仿真 - 隐式中点法积分 index-1 端口哈密顿 DAE，附能量平衡诊断"""

from .config import SimConfig
from .formulation import INDEX_THRESHOLD, InitialState, formulation_for, index_check
from .integrator import MidpointStepper, StepResult, consistent_init, simulate, step
from .trajectory import EnergyBalance, Trajectory, csv_header, energy_balance, write_csv

__all__ = [
    "SimConfig",
    "INDEX_THRESHOLD",
    "InitialState",
    "formulation_for",
    "index_check",
    "consistent_init",
    "MidpointStepper",
    "StepResult",
    "step",
    "simulate",
    "Trajectory",
    "EnergyBalance",
    "energy_balance",
    "csv_header",
    "write_csv",
]
