"""
系统描述文件（JSON）

    {
      "name": "two_capacitor",
      "n": 2,
      "state_names": ["x1", "x2"],
      "J": [["0", "0"], ["0", "0"]],
      "B": [["1"], ["-1"]],
      "G": [["1"], ["0"]],
      "storage": {"hamiltonian": "0.5*x1^2 + 0.5*x2^2"},
      "sample_box": [-1, 1]
    }

可选字段: "G_R" + "Rbar"（耗散）、"reference"（闭式参考解）、
"simulation"（默认仿真配置）、"expected_failure"（负例算例）。
生成函数的 I / J_idx 在文件中从 1 开始计数。
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from phdae.errors import DescriptionError, DimensionMismatch
from phdae.expr import ExprTree, MatrixExpr
from phdae.geometry import DiracStructure, ExplicitHamiltonian, GeneratingFunction, MorseFamily
from phdae.simulate import SimConfig
from phdae.system import PHSystem, assemble

logger = logging.getLogger(__name__)

Cell = Union[str, float]
Grid = list[list[Cell]]
BoxSpec = Union[list[float], list[list[float]]]


class GeneratingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    I: list[int]
    J_idx: list[int]
    V: str


class MorseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(ge=1)
    F: str
    params: Optional[list[str]] = None


class StorageSpec(BaseModel):
    """三选一"""

    model_config = ConfigDict(extra="forbid")

    hamiltonian: Optional[str] = None
    generating: Optional[GeneratingSpec] = None
    morse: Optional[MorseSpec] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "StorageSpec":
        given = [k for k in ("hamiltonian", "generating", "morse") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"storage 必须恰好给出 hamiltonian / generating / morse 之一，得到 {given}")
        return self


class ReferenceSpec(BaseModel):
    """关于 t 的闭式参考解"""

    model_config = ConfigDict(extra="forbid")

    states: dict[str, str] = Field(default_factory=dict)
    multipliers: list[str] = Field(default_factory=list)
    tolerance: float = Field(default=1e-5, gt=0)
    note: str = ""


class SimulationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x0: list[float]
    t0: float = 0.0
    t1: float = 1.0
    dt: float = Field(default=1e-3, gt=0)
    inputs: list[str] = Field(default_factory=list)

    def to_config(self, **overrides) -> SimConfig:
        params = dict(t0=self.t0, t1=self.t1, dt=self.dt, inputs=self.inputs)
        params.update({k: v for k, v in overrides.items() if v is not None})
        return SimConfig(**params)


class SystemDescription(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    n: int = Field(ge=1)
    state_names: list[str]
    J: Grid
    B: Optional[Grid] = None
    G: Optional[Grid] = None
    G_R: Optional[Grid] = None
    Rbar: Optional[list[list[float]]] = None
    storage: StorageSpec
    sample_box: Optional[BoxSpec] = None
    reference: Optional[ReferenceSpec] = None
    simulation: Optional[SimulationSpec] = None
    expected_failure: Optional[str] = None

    @model_validator(mode="after")
    def _check_shapes(self) -> "SystemDescription":
        if len(self.state_names) != self.n:
            raise ValueError(f"state_names 有 {len(self.state_names)} 个，n = {self.n}")
        for label in ("J", "B", "G", "G_R"):
            grid = getattr(self, label)
            if grid is not None and len(grid) != self.n:
                raise ValueError(f"{label} 应有 {self.n} 行，得到 {len(grid)}")
        if (self.G_R is None) != (self.Rbar is None):
            raise ValueError("G_R 与 Rbar 必须同时给出")
        return self

    # ------------------------------------------------------------------ 构造

    def _matrix(self, grid: Optional[Grid], cols: Optional[int] = None) -> MatrixExpr:
        names = self.state_names
        if grid is None:
            return MatrixExpr.zeros(self.n, 0, names)
        return MatrixExpr.parse(grid, names, rows=self.n, cols=cols)

    def build_storage(self):
        names = tuple(self.state_names)
        spec = self.storage
        if spec.hamiltonian is not None:
            return ExplicitHamiltonian(ExprTree.parse(spec.hamiltonian, names))
        if spec.generating is not None:
            g = spec.generating
            I = [i - 1 for i in g.I]
            J = [j - 1 for j in g.J_idx]
            if any(i < 0 or i >= self.n for i in I + J):
                raise DimensionMismatch(f"I / J_idx 必须在 1..{self.n} 之内")
            return GeneratingFunction.from_source(g.V, I, J, names)
        m = spec.morse
        return MorseFamily.from_source(m.F, m.k, names, m.params or ())

    def build_dirac(self) -> DiracStructure:
        return DiracStructure(
            self._matrix(self.J, self.n),
            self._matrix(self.B),
            self._matrix(self.G_R),
            self._matrix(self.G),
        )

    def box(self):
        if self.sample_box is None:
            return None
        arr = np.asarray(self.sample_box, dtype=float)
        return [tuple(row) for row in arr] if arr.ndim == 2 else tuple(arr)

    def build(self, validate: bool = True) -> PHSystem:
        """
        解析表达式并组装系统

        validate=False 时跳过数值验证（负例算例用）。
        """
        dirac = self.build_dirac()
        storage = self.build_storage()
        rbar = None if self.Rbar is None else np.asarray(self.Rbar, dtype=float)
        if not validate:
            return PHSystem(dirac, storage, rbar, sample_box=self.box(), name=self.name)
        return assemble(dirac, storage, rbar, sample_box=self.box(), name=self.name)

    # ------------------------------------------------------------------ 序列化

    @classmethod
    def from_system(cls, sys: PHSystem, **extra) -> "SystemDescription":
        storage = sys.storage
        if isinstance(storage, ExplicitHamiltonian):
            spec = StorageSpec(hamiltonian=storage.H.to_source())
        elif isinstance(storage, GeneratingFunction):
            spec = StorageSpec(generating=GeneratingSpec(
                I=[i + 1 for i in storage.I],
                J_idx=[j + 1 for j in storage.J],
                V=storage.V.to_source(),
            ))
        else:
            spec = StorageSpec(morse=MorseSpec(
                k=storage.k, F=storage.F.to_source(), params=list(storage.param_names),
            ))
        D = sys.dirac
        box = sys.sample_box
        if box is not None:
            arr = np.asarray(box, dtype=float)
            box = arr.tolist()
        return cls(
            name=sys.name,
            n=sys.n,
            state_names=list(sys.state_names),
            J=D.J.to_grid(),
            B=D.B.to_grid() if D.k else None,
            G=D.G.to_grid() if D.m_P else None,
            G_R=D.G_R.to_grid() if D.m_R else None,
            Rbar=sys.rbar.tolist() if D.m_R else None,
            storage=spec,
            sample_box=box,
            **extra,
        )

    def normalized(self) -> dict:
        return self.model_dump(exclude_none=True)

    def to_json(self) -> str:
        return json.dumps(self.normalized(), ensure_ascii=False, indent=2) + "\n"


def parse_description(text: str, source: str = "<string>") -> SystemDescription:
    """
    Raises:
        DescriptionError: JSON 语法错误（带行列号）或字段不符合格式
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptionError(f"{source}: JSON 格式错误（第 {exc.lineno} 行第 {exc.colno} 列）: {exc.msg}") from exc
    try:
        return SystemDescription.model_validate(data)
    except ValidationError as exc:
        raise DescriptionError(f"{source}: 系统描述不合法\n{exc}") from exc


def load_description(path: Union[str, Path]) -> SystemDescription:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DescriptionError(f"无法读取 {path}: {exc}") from exc
    return parse_description(text, str(path))


def save_description(desc: SystemDescription, path: Union[str, Path]) -> None:
    Path(path).write_text(desc.to_json(), encoding="utf-8")
    logger.debug("已写出系统描述 %s", path)
