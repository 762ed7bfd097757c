"""稠密线性代数小工具"""

import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lstsq, lu_factor, lu_solve, svdvals

from phdae.errors import DimensionMismatch, SingularMatrix

logger = logging.getLogger(__name__)

# 行缩放后的主元阈值
PIVOT_TOLERANCE = 1e-12


def inf_norm(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def solve_linear(A, b) -> np.ndarray:
    """
    部分主元 LU 求解 Ax = b

    先按行的最大绝对值缩放，主元低于 1e-12（相对行尺度）时抛 SingularMatrix。
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"solve_linear 需要方阵，得到 {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"右端长度 {b.shape[0]} 与矩阵阶数 {A.shape[0]} 不一致")
    n = A.shape[0]
    if n == 0:
        return np.zeros_like(b)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise SingularMatrix("矩阵或右端含有非有限值")

    scale = np.max(np.abs(A), axis=1)
    if np.any(scale == 0.0):
        raise SingularMatrix("矩阵存在全零行")
    scaled = A / scale[:, None]
    rhs = b / (scale[:, None] if b.ndim == 2 else scale)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(scaled, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOLERANCE:
        raise SingularMatrix(f"主元 {pivots.min():.3e} 低于阈值 {PIVOT_TOLERANCE:g}")
    return lu_solve((lu, piv), rhs, check_finite=False)


def least_squares(A, b) -> np.ndarray:
    """最小二乘 / 最小范数解"""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[1] == 0:
        return np.zeros(0)
    if A.shape[0] == 0:
        return np.zeros(A.shape[1])
    solution, *_ = lstsq(A, b, check_finite=False)
    return solution


def singular_values(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(0)
    return svdvals(M, check_finite=False)


def min_singular_value(M) -> float:
    """最小奇异值（取 min(rows, cols) 个中最小的）；空矩阵返回 +inf"""
    s = singular_values(M)
    return float(s.min()) if s.size else float("inf")


def matrix_rank(M, rtol: float = 1e-8) -> int:
    """数值秩：奇异值低于 rtol × 最大奇异值视为零"""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def null_space_basis(M, rtol: float = 1e-8) -> np.ndarray:
    """零空间的正交基（按列）"""
    M = np.asarray(M, dtype=float)
    cols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(cols)
    _, s, vh = np.linalg.svd(M)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vh[rank:].T.copy()
