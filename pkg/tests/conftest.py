"""pytest 配置与共享夹具"""
import pytest

from phdae.config import reload_settings
from phdae.expr import ExprTree, MatrixExpr
from phdae.fixtures import FixtureManager
from phdae.geometry import DiracStructure, ExplicitHamiltonian
from phdae.system import assemble


@pytest.fixture
def env(monkeypatch):
    """
    设置 PHDAE_ 环境变量并重新加载配置

    用法: env(NEWTON_TOLERANCE="1e-6")
    """
    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"PHDAE_{key}", str(value))
        return reload_settings()

    yield apply
    monkeypatch.undo()
    reload_settings()


@pytest.fixture(scope="session")
def fixtures():
    return FixtureManager()


@pytest.fixture(scope="session")
def two_capacitor(fixtures):
    return fixtures.load_fixture("two_capacitor").system


@pytest.fixture(scope="session")
def oscillator(fixtures):
    return fixtures.load_fixture("oscillator").system


@pytest.fixture
def make_explicit():
    """由字符串网格组装显式储能系统"""
    def build(J, H, names, B=None, G=None, sample_box=(-1.0, 1.0), name=""):
        n = len(names)
        dirac = DiracStructure(
            MatrixExpr.parse(J, names),
            MatrixExpr.parse(B, names, rows=n) if B is not None else None,
            None,
            MatrixExpr.parse(G, names, rows=n) if G is not None else None,
        )
        storage = ExplicitHamiltonian(ExprTree.parse(H, names))
        return assemble(dirac, storage, sample_box=sample_box, name=name)

    return build
