"""
内置算例 - 系统描述格式的 JSON 数据文件

目录结构:
    fixtures/
    ├── __init__.py      # 算例加载器
    └── data/
        └── <name>.json  # 系统描述 + 可选的参考解 / 默认仿真配置

使用方式:
    from phdae.fixtures import FixtureManager

    fm = FixtureManager()
    names = fm.list_fixtures()
    fixture = fm.load_fixture("two_capacitor")
    traj = simulate(fixture.system, fixture.x0, fixture.config())
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from phdae import errors
from phdae.description import ReferenceSpec, SystemDescription, load_description
from phdae.errors import PhdaeError, UnknownFixture
from phdae.expr import ExprTree
from phdae.simulate import SimConfig
from phdae.system import PHSystem


@dataclass
class Fixture:
    """
    已组装的算例

    负例（expected_failure 非空）的 system 未经验证，error 保存组装时的异常。
    """
    name: str
    description: SystemDescription
    system: Optional[PHSystem] = None
    error: Optional[PhdaeError] = None

    @property
    def reference(self) -> Optional[ReferenceSpec]:
        return self.description.reference

    @property
    def expected_failure(self) -> Optional[str]:
        return self.description.expected_failure

    @property
    def x0(self) -> list[float]:
        sim = self.description.simulation
        return list(sim.x0) if sim is not None else [0.0] * self.description.n

    def config(self, **overrides) -> SimConfig:
        sim = self.description.simulation
        if sim is None:
            return SimConfig(**{k: v for k, v in overrides.items() if v is not None})
        return sim.to_config(**overrides)

    def reference_states(self, times) -> dict[str, np.ndarray]:
        """参考解在给定时刻上的值（按状态名）"""
        if self.reference is None:
            return {}
        times = np.asarray(times, dtype=float)
        values = {}
        for name, src in self.reference.states.items():
            tree = ExprTree.parse(src, ["t"])
            values[name] = np.array([tree.evaluate([t]) for t in times])
        return values

    def reference_multipliers(self, times) -> np.ndarray:
        trees = [ExprTree.parse(src, ["t"]) for src in (self.reference.multipliers if self.reference else [])]
        times = np.asarray(times, dtype=float)
        return np.array([[tree.evaluate([t]) for tree in trees] for t in times]).reshape(len(times), len(trees))


class FixtureManager:
    """算例管理器"""

    def __init__(self, data_dir: Optional[Path] = None):
        if data_dir is None:
            data_dir = Path(__file__).parent / "data"
        self.data_dir = Path(data_dir)

    def list_fixtures(self) -> list[str]:
        """列出所有可用算例"""
        return sorted(p.stem for p in self.data_dir.glob("*.json") if not p.name.startswith("_"))

    def path_of(self, name: str) -> Path:
        path = self.data_dir / f"{name}.json"
        if not path.is_file():
            available = ", ".join(self.list_fixtures())
            raise UnknownFixture(f"没有名为 '{name}' 的算例（可用: {available}）")
        return path

    def load_description(self, name: str) -> SystemDescription:
        return load_description(self.path_of(name))

    def load_fixture(self, name: str) -> Fixture:
        """
        加载并组装算例

        负例算例按预期失败时返回未组装的 Fixture；
        失败类型与 expected_failure 不符时异常原样抛出。
        """
        desc = self.load_description(name)
        if desc.expected_failure is None:
            return Fixture(name=name, description=desc, system=desc.build())
        expected = getattr(errors, desc.expected_failure, None)
        try:
            system = desc.build()
        except PhdaeError as exc:
            if expected is not None and isinstance(exc, expected):
                return Fixture(name=name, description=desc, system=desc.build(validate=False), error=exc)
            raise
        return Fixture(name=name, description=desc, system=system)

    def get_fixture_info(self, name: str) -> dict:
        desc = self.load_description(name)
        return {
            "name": name,
            "n": desc.n,
            "storage": next(k for k, v in desc.storage.model_dump().items() if v is not None),
            "has_reference": desc.reference is not None,
            "expected_failure": desc.expected_failure,
            "note": desc.reference.note if desc.reference else "",
        }


_default_manager = FixtureManager()


def list_fixtures() -> list[str]:
    return _default_manager.list_fixtures()


def load_fixture(name: str) -> Fixture:
    return _default_manager.load_fixture(name)


__all__ = ["Fixture", "FixtureManager", "list_fixtures", "load_fixture"]
