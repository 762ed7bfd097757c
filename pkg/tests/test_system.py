"""测试系统组装、约束分类、约束转换与最优控制表述"""
import numpy as np
import pytest

from phdae.errors import DimensionMismatch, MorseRankFailure, NothingToConvert, ValidationFailed
from phdae.expr import ExprTree, MatrixExpr
from phdae.geometry import (
    DiracStructure,
    ExplicitHamiltonian,
    GeneratingFunction,
    MorseFamily,
    lagrangian_membership,
    sample_lagrangian_points,
)
from phdae.system import (
    DIRAC,
    LAGRANGE,
    assemble,
    build_optimal_control,
    canonical_morse_family,
    dirac_to_lagrange,
    extract_constraints,
    is_input_state_output,
    lagrange_to_dirac,
    stationary_rows,
)

XY = ["x1", "x2"]


class TestAssemble:
    """测试系统组装与验证"""

    def test_two_capacitor(self, two_capacitor):
        assert (two_capacitor.n, two_capacitor.k, two_capacitor.m_P) == (2, 1, 1)
        assert two_capacitor.storage_kind == "hamiltonian"

    def test_storage_dimension_mismatch(self):
        D = DiracStructure(MatrixExpr.parse([["0", "1"], ["-1", "0"]], XY))
        storage = ExplicitHamiltonian(ExprTree.parse("x1^2", ["x1"]))
        with pytest.raises(DimensionMismatch):
            assemble(D, storage)

    def test_non_skew_structure(self, make_explicit):
        with pytest.raises(ValidationFailed):
            make_explicit([["0", "1"], ["1", "0"]], "x1^2 + x2^2", XY)

    def test_rbar_must_be_psd(self):
        D = DiracStructure(
            MatrixExpr.parse([["0", "1"], ["-1", "0"]], XY),
            G_R=MatrixExpr.parse([["0"], ["1"]], XY),
        )
        storage = ExplicitHamiltonian(ExprTree.parse("x1^2 + x2^2", XY))
        with pytest.raises(ValidationFailed):
            assemble(D, storage, rbar=[[-1.0]])

    def test_dissipation(self, fixtures):
        sys = fixtures.load_fixture("damped_oscillator").system
        assert np.allclose(sys.dissipation_matrix().evaluate([0.0, 0.0]), [[0.0, 0.0], [0.0, 1.0]])
        assert sys.dissipated_power([0.0, 0.0], [0.5, 2.0]) == pytest.approx(4.0)

    def test_morse_rank_failure(self):
        D = DiracStructure(MatrixExpr.parse([["0"]], ["x1"]))
        with pytest.raises(MorseRankFailure):
            assemble(D, MorseFamily.from_source("lam1^3", 1, ["x1"]), sample_box=(-1.0, 1.0))

    def test_input_state_output(self, oscillator):
        iso, form = is_input_state_output(oscillator)
        assert iso
        assert np.allclose(form.vector_field([1.0, 0.0]), [0.0, -1.0])
        assert np.allclose(form.vector_field([1.0, 0.0], [2.0]), [0.0, 1.0])
        assert np.allclose(form.output([0.3, 0.4]), [0.4])

    def test_constrained_system_is_not_iso(self, two_capacitor):
        assert is_input_state_output(two_capacitor) == (False, None)


class TestExtractConstraints:
    """测试约束提取与分类"""

    def test_explicit_without_constraints(self, oscillator):
        report = extract_constraints(oscillator)
        assert report.empty

    def test_dirac_constraint(self, two_capacitor):
        """B = (1, −1)，H = ½|x|²：约束 x1 − x2 = 0"""
        report = extract_constraints(two_capacitor)
        assert report.classes == {DIRAC}
        (c,) = report.dirac
        assert c.residual([0.7, 0.2]) == pytest.approx(0.5)
        assert c.residual([0.4, 0.4]) == pytest.approx(0.0)

    def test_converted_system_has_lagrange_constraint(self, two_capacitor):
        extended = dirac_to_lagrange(two_capacitor)
        report = extract_constraints(extended, count=10, seed=0)
        assert report.classes == {LAGRANGE}
        assert [c.label for c in report.lagrange] == ["lam1 = 0"]
        assert report.probes.feasible == 0
        assert report.probes.infeasible == 10

    def test_generating_function_without_constraints(self, fixtures):
        sys = fixtures.load_fixture("implicit_oscillator").system
        report = extract_constraints(sys, count=10, seed=0)
        assert report.empty
        assert report.probes.feasible == 10
        assert len(report.probes.witnesses) == 10

    def test_stationary_rows(self):
        storage = GeneratingFunction.from_source("0.5*x1^2 + x1*e_x2", [0], [1], XY)
        assert stationary_rows(storage) == [0]
        assert stationary_rows(GeneratingFunction.from_source("e_x2^2", [0], [1], XY)) == []

    def test_to_dict(self, two_capacitor):
        payload = extract_constraints(two_capacitor).to_dict()
        assert len(payload["dirac"]) == 1
        assert payload["lagrange"] == []


class TestConversion:
    """测试 Dirac ↔ Lagrange 约束转换"""

    def test_dirac_to_lagrange(self, two_capacitor):
        extended = dirac_to_lagrange(two_capacitor)
        assert extended.state_names == ("x1", "x2", "lam1")
        assert extended.k == 0
        assert isinstance(extended.storage, GeneratingFunction)
        assert extended.storage.I == (0, 1)
        assert extended.storage.J == (2,)
        assert extended.name == "two_capacitor_lagrange"

    def test_dirac_to_lagrange_structure(self, two_capacitor):
        """扩展结构 [[J, B], [−Bᵀ, 0]]"""
        J = dirac_to_lagrange(two_capacitor).dirac.J.evaluate([0.0, 0.0, 0.0])
        assert np.allclose(J, [[0, 0, 1], [0, 0, -1], [-1, 1, 0]])

    def test_nothing_to_convert(self, oscillator, two_capacitor):
        with pytest.raises(NothingToConvert):
            dirac_to_lagrange(oscillator)
        with pytest.raises(NothingToConvert):
            lagrange_to_dirac(two_capacitor)

    def test_canonical_morse_family(self):
        """F = V(x1, λ) + λ·x2"""
        storage = GeneratingFunction.from_source("0.5*x1^2 - 0.5*e_x2^2", [0], [1], XY)
        family = canonical_morse_family(storage)
        assert family.param_names == ("lam1",)
        assert family.F.to_source() == "0.5*x1^2 - 0.5*lam1^2 + lam1*x2"

    def test_membership_is_preserved(self):
        """生成函数与对应 Morse 族表示同一个拉格朗日子流形"""
        storage = GeneratingFunction.from_source("0.5*x1^2 - 0.5*e_x2^2 + 0.1*x1*e_x2", [0], [1], XY)
        family = canonical_morse_family(storage)
        for x, e in sample_lagrangian_points(storage, 20, seed=0):
            assert lagrangian_membership(family, x, e, seed=0).member

    def test_lagrange_to_dirac_morse(self, fixtures):
        implicit = fixtures.load_fixture("lq_optimal_control_implicit").system
        explicit = lagrange_to_dirac(implicit)
        assert explicit.state_names == ("q", "p", "u")
        assert explicit.k == 1
        assert explicit.storage.H.to_source() == "p*u + 0.5*q^2 + 0.5*u^2"
        assert np.allclose(explicit.dirac.B.evaluate([0.0, 0.0, 0.0]).ravel(), [0, 0, 1])

    def test_lagrange_to_dirac_generating(self, fixtures):
        sys = fixtures.load_fixture("implicit_oscillator").system
        explicit = lagrange_to_dirac(sys)
        assert explicit.state_names == ("x1", "x2", "lam1")
        assert explicit.storage.H.to_source() == "0.5*x1^2 - 0.5*lam1^2 + lam1*x2"
        assert explicit.m_P == 1

    def test_round_trip_dimensions(self, two_capacitor):
        back = lagrange_to_dirac(dirac_to_lagrange(two_capacitor))
        assert back.n == 4
        assert back.k == 1

    def test_membership_equivalence_in_both_directions(self):
        """200 个种子样本：两种表示互相判定为成员，残差 ≤ 1e-8"""
        storage = GeneratingFunction.from_source("0.5*x1^2 - 0.5*e_x2^2 + 0.1*x1*e_x2", [0], [1], XY)
        family = canonical_morse_family(storage)
        forward = sample_lagrangian_points(storage, 200, seed=0)
        assert len(forward) == 200
        for x, e in forward:
            assert lagrangian_membership(family, x, e, tol=1e-8, seed=0).residual <= 1e-8
        backward = sample_lagrangian_points(family, 200, seed=0)
        assert len(backward) >= 190
        for x, e in backward:
            assert lagrangian_membership(storage, x, e).residual <= 1e-8

    def test_constraint_classes_swap_back(self, two_capacitor):
        """Dirac → Lagrange → Dirac：约束类别随转换互换"""
        extended = dirac_to_lagrange(two_capacitor)
        back = lagrange_to_dirac(extended)
        assert extract_constraints(two_capacitor).classes == {DIRAC}
        assert extract_constraints(extended, count=10, seed=0).classes == {LAGRANGE}
        report = extract_constraints(back, count=10, seed=0)
        assert report.classes == {DIRAC}
        (c,) = report.dirac
        assert c.residual([0.3, 0.3, 0.0, 0.5]) == pytest.approx(0.0, abs=1e-12)
        assert abs(c.residual([0.3, 0.3, 0.2, 0.5])) == pytest.approx(0.2)

    def test_lagrange_to_dirac_adds_dirac_constraint(self, fixtures):
        sys = fixtures.load_fixture("implicit_oscillator").system
        assert extract_constraints(sys, count=10, seed=0).empty
        assert extract_constraints(lagrange_to_dirac(sys)).classes == {DIRAC}


class TestOptimalControl:
    """测试最优控制问题的两种表述"""

    @pytest.fixture
    def lq(self):
        base = ["q", "u"]
        f = MatrixExpr.parse([["u"]], base)
        L = ExprTree.parse("0.5*q^2 + 0.5*u^2", base)
        return build_optimal_control(f, L, ["q"], ["u"], name="lq", sample_box=(-1.0, 1.0))

    def test_explicit_form(self, lq):
        explicit, _ = lq
        assert explicit.state_names == ("q", "p", "u")
        assert explicit.k == 1
        assert explicit.storage.H.evaluate([1.0, 2.0, 3.0]) == pytest.approx(11.0)

    def test_implicit_form(self, lq):
        _, implicit = lq
        assert implicit.state_names == ("q", "p")
        assert implicit.storage_kind == "morse"
        assert implicit.storage.param_names == ("u",)

    def test_bad_dynamics_shape(self):
        base = ["q", "u"]
        with pytest.raises(DimensionMismatch):
            build_optimal_control(
                MatrixExpr.parse([["u"], ["q"]], base), ExprTree.parse("q^2", base), ["q"], ["u"]
            )
