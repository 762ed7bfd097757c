"""中心差分（测试用的数值导数基准）"""
from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-6


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = DEFAULT_STEP) -> np.ndarray:
    """标量函数的中心差分梯度；f 抛出的 DomainError 原样传出"""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def finite_diff_jacobian(F: Callable[[np.ndarray], np.ndarray], x, h: float = DEFAULT_STEP) -> np.ndarray:
    """向量函数的中心差分 Jacobian（行 = 输出分量）"""
    x = np.asarray(x, dtype=float)
    columns = []
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        forward = np.asarray(F(x + step), dtype=float)
        backward = np.asarray(F(x - step), dtype=float)
        columns.append((forward - backward) / (2.0 * h))
    if not columns:
        return np.zeros((np.asarray(F(x)).size, 0))
    return np.stack(columns, axis=1)
