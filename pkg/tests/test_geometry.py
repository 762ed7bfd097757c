"""测试几何子系统：Dirac 结构验证、储能关系成员判定、π(L) 探测、Morse 秩条件"""
import numpy as np
import pytest

from phdae.errors import DimensionMismatch, Inconclusive, RankDeficientConstraint
from phdae.expr import ExprTree, MatrixExpr
from phdae.geometry import (
    DiracStructure,
    ExplicitHamiltonian,
    GeneratingFunction,
    MorseFamily,
    dirac_sample_basis,
    lagrange_constraint_probe,
    lagrangian_membership,
    multistart_grid,
    normalize_box,
    projection_residual,
    sample_lagrangian_points,
    sample_points,
    validate_dirac,
    validate_morse,
)

XY = ["x1", "x2"]


def dirac(J, B=None, G_R=None, G=None, names=XY):
    n = len(names)
    parse = lambda grid: MatrixExpr.parse(grid, names, rows=n) if grid is not None else None
    return DiracStructure(MatrixExpr.parse(J, names), parse(B), parse(G_R), parse(G))


class TestSampling:
    """测试确定性采样"""

    def test_points_inside_box(self):
        points = sample_points(3, (-2.0, 0.5), count=50, seed=1)
        assert points.shape == (50, 3)
        assert points.min() >= -2.0 and points.max() <= 0.5

    def test_deterministic(self):
        assert np.array_equal(sample_points(2, count=5, seed=7), sample_points(2, count=5, seed=7))

    def test_seed_from_settings(self, env):
        env(SEED="3")
        assert np.array_equal(sample_points(2, count=4), sample_points(2, count=4, seed=3))

    def test_per_dimension_box(self):
        lows, highs = normalize_box([(0, 1), (5, 6)], 2)
        assert lows.tolist() == [0.0, 5.0]
        assert highs.tolist() == [1.0, 6.0]

    def test_multistart_grid_starts_at_origin(self):
        grid = multistart_grid(2, seed=0)
        assert grid.shape == (9, 2)
        assert np.array_equal(grid[0], [0.0, 0.0])


class TestDiracStructure:
    """测试 Dirac 结构的数值验证"""

    def test_canonical_structure_passes(self):
        report = validate_dirac(dirac([["0", "1"], ["-1", "0"]], G=[["0"], ["1"]]), count=20, seed=0)
        assert report.passed
        assert report.max_isotropy <= 1e-10
        assert all(c.dimension == 3 for c in report.checks)

    def test_state_dependent_structure_passes(self):
        D = dirac([["0", "x1*x2"], ["-x1*x2", "0"]], B=[["1"], ["x1"]], G_R=[["1"], ["0"]])
        report = validate_dirac(D, box=(-1.0, 1.0), count=30, seed=0)
        assert report.passed

    def test_non_skew_structure_fails(self):
        report = validate_dirac(dirac([["0", "1"], ["1", "0"]]), count=5, seed=0)
        assert not report.passed
        assert report.max_skewness == pytest.approx(2.0)
        assert "失败" in report.format()

    def test_basis_dimension(self):
        D = dirac([["0", "0"], ["0", "0"]], B=[["1"], ["-1"]], G=[["1"], ["0"]])
        basis = dirac_sample_basis(D, [0.1, 0.2])
        assert basis.flows.shape == (3, 3)
        assert basis.efforts.shape == (3, 3)

    def test_rank_deficient_constraint(self):
        D = dirac([["0", "0"], ["0", "0"]], B=[["x1"], ["0"]])
        with pytest.raises(RankDeficientConstraint):
            dirac_sample_basis(D, [0.0, 0.5])

    def test_flows_follow_graph(self):
        D = dirac([["0", "1"], ["-1", "0"]], G=[["0"], ["1"]])
        f_S, f_R, f_P = D.flows([0.0, 0.0], [1.0, 2.0], e_P=[3.0])
        assert np.allclose(f_S, [-2.0, -2.0])
        assert f_R.size == 0
        assert np.allclose(f_P, [2.0])

    def test_non_square_structure(self):
        with pytest.raises(DimensionMismatch):
            DiracStructure(MatrixExpr.parse([["0", "1"]], XY))


class TestStorageRelations:
    """测试三种储能关系"""

    def test_explicit_membership(self):
        storage = ExplicitHamiltonian(ExprTree.parse("0.5*x1^2 + 0.5*x2^2", XY))
        assert lagrangian_membership(storage, [1.0, 2.0], [1.0, 2.0]).member
        result = lagrangian_membership(storage, [1.0, 2.0], [1.0, 3.0])
        assert not result.member
        assert result.residual == pytest.approx(1.0)

    def test_generating_function_chart(self):
        """V = ½x1² − ½e_x2²：x2 = e_x2"""
        storage = GeneratingFunction.from_source("0.5*x1^2 - 0.5*e_x2^2", [0], [1], XY)
        z = storage.chart_point([0.3], [0.4])
        assert np.allclose(storage.state_from_chart(z), [0.3, 0.4])
        assert np.allclose(storage.effort_from_chart(z), [0.3, 0.4])
        assert storage.energy(z) == pytest.approx(0.5 * 0.09 + 0.5 * 0.16)
        assert lagrangian_membership(storage, [0.3, 0.4], [0.3, 0.4]).member

    def test_generating_function_variables_checked(self):
        with pytest.raises(DimensionMismatch):
            GeneratingFunction(ExprTree.parse("x1", XY), (0,), (1,), tuple(XY))

    def test_morse_membership(self):
        """LQ 族 F = p·u + ½q² + ½u²：u = −p"""
        storage = MorseFamily.from_source("p*u + 0.5*q^2 + 0.5*u^2", 1, ["q", "p"], ["u"])
        result = lagrangian_membership(storage, [0.5, 0.2], [0.5, -0.2], seed=0)
        assert result.member
        assert result.witness[0] == pytest.approx(-0.2, abs=1e-8)
        assert not lagrangian_membership(storage, [0.5, 0.2], [0.5, 0.3], seed=0).member

    def test_default_multiplier_names(self):
        storage = MorseFamily.from_source("lam1^2 + x1*lam1", 1, ["x1"])
        assert storage.param_names == ("lam1",)

    @pytest.mark.parametrize("storage", [
        ExplicitHamiltonian(ExprTree.parse("0.5*x1^2 + x2^4", XY)),
        GeneratingFunction.from_source("0.5*x1^2 - 0.5*e_x2^2", [0], [1], XY),
    ])
    def test_sampled_points_are_members(self, storage):
        pairs = sample_lagrangian_points(storage, 10, seed=0)
        assert len(pairs) == 10
        for x, e in pairs:
            assert lagrangian_membership(storage, x, e).member


class TestConstraintProbe:
    """测试 x ∈ π(L) 的探测"""

    def test_explicit_is_always_feasible(self):
        storage = ExplicitHamiltonian(ExprTree.parse("x1^2", ["x1"]))
        assert lagrange_constraint_probe(storage, [3.0]).feasible

    def test_affine_generating_function(self):
        """V 不含 e_x2 时 π(L) = {x2 = 0}"""
        storage = GeneratingFunction.from_source("0.5*x1^2", [0], [1], XY)
        feasible = lagrange_constraint_probe(storage, [0.3, 0.0])
        assert feasible.feasible and feasible.affine
        assert not lagrange_constraint_probe(storage, [0.3, 0.5]).feasible
        assert projection_residual(storage, [0.3, 0.5]) == pytest.approx(0.5)

    def test_nonlinear_generating_function(self):
        """x2 = −∂V/∂e = e³ 对每个 x2 都可解"""
        storage = GeneratingFunction.from_source("0.5*x1^2 - 0.25*e_x2^4", [0], [1], XY)
        result = lagrange_constraint_probe(storage, [0.1, 8.0], seed=0)
        assert result.feasible
        assert result.witness[0] == pytest.approx(2.0, abs=1e-6)

    def test_inconclusive(self):
        """x2 + e² = 0 在 x2 > 0 时无实根，多起点全部失败"""
        storage = GeneratingFunction.from_source("0.5*x1^2 + e_x2^3/3", [0], [1], XY)
        with pytest.raises(Inconclusive):
            lagrange_constraint_probe(storage, [0.0, 1.0], seed=0)


class TestMorseRank:
    """测试 Morse 族的秩条件"""

    def test_lq_family_passes(self):
        storage = MorseFamily.from_source("p*u + 0.5*q^2 + 0.5*u^2", 1, ["q", "p"], ["u"])
        report = validate_morse(storage, box=(-1.0, 1.0), count=10, seed=0)
        assert report.passed
        assert report.min_morse_sigma == pytest.approx(np.sqrt(2.0))

    def test_cubic_family_fails(self):
        """F = λ³ 的零集 λ = 0 上二阶导数为零"""
        storage = MorseFamily.from_source("lam1^3", 1, ["x1"])
        report = validate_morse(storage, box=(-1.0, 1.0), count=10, seed=0)
        assert not report.passed
        assert report.min_morse_sigma < 1e-8
