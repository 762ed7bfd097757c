"""确定性采样：验证用的随机点和多起点网格"""
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np

from phdae.config import current_settings

Box = Union[tuple[float, float], Sequence[tuple[float, float]]]

GRID_RADIUS = 2.0
GRID_JITTER = 0.05


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """未指定种子时使用配置中的种子（PHDAE_SEED）"""
    return np.random.default_rng(current_settings().seed if seed is None else seed)


def normalize_box(box: Optional[Box], n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    把采样盒统一成 (lows, highs)

    box 可以是 (low, high)，也可以是每个维度一个 (low, high)。
    """
    if box is None:
        box = current_settings().default_box
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 1:
        lows = np.full(n, arr[0])
        highs = np.full(n, arr[1])
    else:
        if arr.shape != (n, 2):
            raise ValueError(f"采样盒应为 {n}×2，得到 {arr.shape}")
        lows, highs = arr[:, 0].copy(), arr[:, 1].copy()
    if np.any(highs < lows):
        raise ValueError("采样盒上界小于下界")
    return lows, highs


def sample_points(
    n: int,
    box: Optional[Box] = None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """盒内均匀分布的 count × n 个伪随机点"""
    count = current_settings().sample_count if count is None else count
    lows, highs = normalize_box(box, n)
    rng = make_rng(seed)
    return lows + (highs - lows) * rng.random((count, n))


def multistart_grid(d: int, seed: Optional[int] = None) -> np.ndarray:
    """
    多起点 Newton 的初值：[-2, 2]^d 上的 3^d 格点，带确定性抖动

    按到原点的距离排序，原点本身不抖动。
    """
    if d == 0:
        return np.zeros((1, 0))
    lattice = np.array(list(product((-GRID_RADIUS, 0.0, GRID_RADIUS), repeat=d)))
    order = np.argsort(np.linalg.norm(lattice, axis=1), kind="stable")
    lattice = lattice[order]
    rng = make_rng(seed)
    jitter = rng.uniform(-GRID_JITTER, GRID_JITTER, size=lattice.shape)
    jitter[0] = 0.0
    return lattice + jitter
