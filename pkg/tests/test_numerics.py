"""测试数值内核：线性求解、阻尼 Newton、约束投影"""
import numpy as np
import pytest

from phdae.errors import DimensionMismatch, NoConvergence, SingularJacobian, SingularMatrix
from phdae.numerics import (
    NewtonConfig,
    gauss_newton_solve,
    matrix_rank,
    min_singular_value,
    newton_solve,
    null_space_basis,
    project_onto_constraints,
    solve_linear,
)


class TestLinearAlgebra:
    """测试稠密线性代数"""

    def test_solve(self):
        x = solve_linear([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0])
        assert np.allclose(x, [0.8, 1.4])

    def test_badly_scaled_rows(self):
        """行缩放后仍能求解量级悬殊的方程"""
        A = [[1e8, 2e8], [3e-6, -1e-6]]
        x = solve_linear(A, [3e8, 2e-6])
        assert np.allclose(np.asarray(A) @ x, [3e8, 2e-6])

    @pytest.mark.parametrize("A", [
        [[1.0, 2.0], [2.0, 4.0]],
        [[1.0, 0.0], [0.0, 0.0]],
    ])
    def test_singular(self, A):
        with pytest.raises(SingularMatrix):
            solve_linear(A, [1.0, 1.0])

    def test_not_square(self):
        with pytest.raises(DimensionMismatch):
            solve_linear(np.ones((2, 3)), [1.0, 1.0])

    def test_empty_system(self):
        assert solve_linear(np.zeros((0, 0)), np.zeros(0)).shape == (0,)

    def test_min_singular_value_of_empty_matrix(self):
        assert min_singular_value(np.zeros((0, 3))) == float("inf")

    def test_rank_and_null_space(self):
        M = np.array([[1.0, -1.0, 0.0]])
        assert matrix_rank(M) == 1
        N = null_space_basis(M)
        assert N.shape == (3, 2)
        assert np.allclose(M @ N, 0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_well_conditioned_residual(self, seed):
        """对角占优的随机方阵：残差 ‖Ax − b‖ ≤ 1e-9 (1 + ‖b‖)"""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        A = rng.standard_normal((n, n)) + n * np.eye(n)
        b = rng.standard_normal(n) * 10.0
        x = solve_linear(A, b)
        assert np.linalg.norm(A @ x - b) <= 1e-9 * (1.0 + np.linalg.norm(b))


class TestNewton:
    """测试阻尼 Newton"""

    def test_sqrt_two(self):
        result = newton_solve(lambda x: x ** 2 - 2.0, lambda x: np.diag(2.0 * x), [1.0])
        assert result.x[0] == pytest.approx(np.sqrt(2.0), abs=1e-10)
        assert result.converged
        assert result.residual_norm <= 1e-10

    def test_already_converged(self):
        result = newton_solve(lambda x: x, lambda x: np.eye(1), [0.0])
        assert result.iterations == 0

    def test_singular_jacobian(self):
        """x² + 1 = 0 无实根：Jacobian 在 0 处奇异"""
        with pytest.raises(SingularJacobian):
            newton_solve(lambda x: x ** 2 + 1.0, lambda x: np.diag(2.0 * x), [0.0])

    def test_no_real_root_is_no_convergence(self):
        """SingularJacobian 同时也是 NoConvergence"""
        with pytest.raises(NoConvergence):
            newton_solve(lambda x: x ** 2 + 1.0, lambda x: np.diag(2.0 * x), [1.0])

    def test_iteration_budget(self):
        cfg = NewtonConfig(max_iterations=1)
        with pytest.raises(NoConvergence):
            newton_solve(lambda x: np.exp(x) - 10.0, lambda x: np.diag(np.exp(x)), [0.0], cfg)

    def test_gauss_newton_overdetermined(self):
        residual = lambda x: np.array([x[0] - 1.0, 2.0 * x[0] - 2.0])
        jacobian = lambda x: np.array([[1.0], [2.0]])
        result = gauss_newton_solve(residual, jacobian, [0.0])
        assert result.x[0] == pytest.approx(1.0)

    def test_gauss_newton_inconsistent_returns_best(self):
        """不相容的方程组在 raise_on_failure=False 时返回 converged=False"""
        residual = lambda x: np.array([x[0] - 1.0, x[0] + 1.0])
        jacobian = lambda x: np.array([[1.0], [1.0]])
        result = gauss_newton_solve(residual, jacobian, [3.0], raise_on_failure=False)
        assert not result.converged
        assert result.x[0] == pytest.approx(0.0, abs=1e-8)

    def test_quadratic_from_three(self):
        result = newton_solve(lambda x: x ** 2 - 4.0, lambda x: np.diag(2.0 * x), [3.0])
        assert result.x[0] == pytest.approx(2.0, abs=1e-10)

    def test_linear_in_one_iteration(self):
        result = newton_solve(lambda x: 2.0 * x - 4.0, lambda x: np.diag([2.0]), [0.0])
        assert result.x[0] == pytest.approx(2.0)
        assert result.iterations == 1

    @pytest.mark.parametrize("seed", range(8))
    def test_monotone_cubic(self, seed):
        """x³ + a x + b（a > 0）单调，任意起点都收敛到唯一实根"""
        rng = np.random.default_rng(seed)
        a = rng.uniform(0.5, 3.0)
        b = rng.uniform(-5.0, 5.0)
        start = rng.uniform(-3.0, 3.0)
        result = newton_solve(
            lambda x: x ** 3 + a * x + b,
            lambda x: np.diag(3.0 * x ** 2 + a),
            [start],
        )
        roots = np.roots([1.0, 0.0, a, b])
        real_root = roots[np.argmin(np.abs(roots.imag))].real
        assert result.x[0] == pytest.approx(real_root, abs=1e-8)


class TestProjection:
    """测试约束投影"""

    def test_linear_constraint(self):
        result = project_onto_constraints(
            lambda y: np.array([y[0] + y[1] - 1.0]),
            lambda y: np.array([[1.0, 1.0]]),
            [0.0, 0.0],
        )
        assert np.allclose(result.x, [0.5, 0.5])

    def test_circle(self):
        """投影到单位圆上取最近点"""
        result = project_onto_constraints(
            lambda y: np.array([y[0] ** 2 + y[1] ** 2 - 1.0]),
            lambda y: np.array([[2.0 * y[0], 2.0 * y[1]]]),
            [2.0, 0.0],
        )
        assert np.allclose(result.x, [1.0, 0.0], atol=1e-8)

    def test_feasible_anchor_is_kept(self):
        result = project_onto_constraints(
            lambda y: np.array([y[0] - y[1]]),
            lambda y: np.array([[1.0, -1.0]]),
            [0.3, 0.3],
        )
        assert np.allclose(result.x, [0.3, 0.3])
        assert result.iterations == 0

    def test_no_constraints(self):
        result = project_onto_constraints(lambda y: np.zeros(0), lambda y: np.zeros((0, 2)), [1.0, 2.0])
        assert np.allclose(result.x, [1.0, 2.0])

    def test_identically_zero_constraint_row(self):
        """恒为零的约束行使 G Gᵀ 奇异，仍投影到可行集"""
        result = project_onto_constraints(
            lambda y: np.array([y[0] - 1.0, 0.0]),
            lambda y: np.array([[1.0, 0.0], [0.0, 0.0]]),
            [3.0, 2.0],
        )
        assert np.allclose(result.x, [1.0, 2.0])

    def test_duplicated_constraint(self):
        result = project_onto_constraints(
            lambda y: np.array([y[0] + y[1] - 1.0, y[0] + y[1] - 1.0]),
            lambda y: np.array([[1.0, 1.0], [1.0, 1.0]]),
            [0.0, 0.0],
        )
        assert np.allclose(result.x, [0.5, 0.5])


class TestNewtonConfig:
    """测试 Newton 参数来自配置"""

    def test_from_settings(self, env):
        env(NEWTON_TOLERANCE="1e-6", NEWTON_MAX_ITERATIONS="7")
        cfg = NewtonConfig.from_settings()
        assert cfg.tolerance == 1e-6
        assert cfg.max_iterations == 7

    def test_invalid_tolerance(self):
        with pytest.raises(ValueError):
            NewtonConfig(tolerance=0.0)
