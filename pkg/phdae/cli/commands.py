"""子命令实现：validate / classify / convert / simulate / legendre / fixtures"""

import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from phdae.description import SystemDescription, load_description, save_description
from phdae.errors import DescriptionError, DomainError, NonConvexPoint
from phdae.expr import ExprTree
from phdae.fixtures import FixtureManager
from phdae.geometry import (
    GeneratingFunction,
    MorseFamily,
    sample_points,
    validate_dirac,
)
from phdae.legendre import (
    legendre,
    legendre_inverse_check,
    partial_legendre,
    tilde,
    tilde_grad_check,
)
from phdae.numerics import inf_norm
from phdae.simulate import INDEX_THRESHOLD, SimConfig, energy_balance, index_check, simulate, write_csv
from phdae.system import (
    PHSystem,
    dirac_to_lagrange,
    ensure_morse_rank,
    extract_constraints,
    is_input_state_output,
    lagrange_to_dirac,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MATH = 2

# --check 的残差上限
CHECK_TOLERANCE = 1e-7
# classify 计算 σ_min 的采样点数
INDEX_SAMPLES = 20


def load_system_description(source: str) -> SystemDescription:
    """文件路径优先，其次按内置算例名查找"""
    path = Path(source)
    if path.is_file():
        return load_description(path)
    manager = FixtureManager()
    if source in manager.list_fixtures():
        return manager.load_description(source)
    raise DescriptionError(f"找不到系统描述文件 '{source}'（也不是内置算例名）")


def _fmt(value: float) -> str:
    return f"{value:.6g}"


# =============================================================================
# validate
# =============================================================================


def cmd_validate(source: str, verbose: bool = False) -> int:
    desc = load_system_description(source)
    system = desc.build()
    report = validate_dirac(system.dirac, box=system.sample_box)
    print(report.format(verbose))
    if isinstance(system.storage, MorseFamily):
        print(ensure_morse_rank(system.storage, system.sample_box).format(verbose))
    print(f"{system.name or source}: 验证通过")
    return EXIT_OK


# =============================================================================
# classify
# =============================================================================


def _index_points(system: PHSystem, witnesses) -> list[np.ndarray]:
    """指标检查所用的仿真坐标点"""
    storage = system.storage
    if isinstance(storage, GeneratingFunction):
        return [storage.chart_point(x[list(storage.I)], w) for x, w in witnesses]
    if isinstance(storage, MorseFamily):
        return [storage.joint(x, w) for x, w in witnesses]
    return list(sample_points(system.n, system.sample_box, INDEX_SAMPLES))


def index_summary(system: PHSystem, witnesses=()) -> Optional[float]:
    """采样点上的最小 σ_min；没有可用点时返回 None"""
    sigmas = []
    for point in _index_points(system, list(witnesses)[:INDEX_SAMPLES]):
        try:
            sigmas.append(index_check(system, point))
        except DomainError:
            continue
    return min(sigmas) if sigmas else None


def _plural(count: int, kind: str) -> str:
    return f"{count} 条 {kind} 约束"


def cmd_classify(source: str, as_json: bool = False) -> int:
    system = load_system_description(source).build()
    report = extract_constraints(system)
    sigma = index_summary(system, report.probes.witnesses)
    iso, _ = is_input_state_output(system)

    if as_json:
        payload = report.to_dict()
        payload["index"] = {
            "sigma_min": None if sigma is None or not np.isfinite(sigma) else sigma,
            "index_one": sigma is None or sigma >= INDEX_THRESHOLD,
        }
        payload["input_state_output"] = iso
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(f"系统 {system.name or source}（n = {system.n}，储能: {system.storage_kind}）")
        if report.empty:
            suffix = "；输入-状态-输出形式" if iso else ""
            print(f"没有代数约束{suffix}")
        for kind, items in (("Dirac", report.dirac), ("Lagrange", report.lagrange)):
            if items:
                print(f"{_plural(len(items), kind)}: " + "; ".join(c.label for c in items))
        if sigma is not None and np.isfinite(sigma):
            verdict = "index-1" if sigma >= INDEX_THRESHOLD else "不是 index-1"
            print(f"{verdict}（σ_min = {_fmt(sigma)}）")
        elif sigma is not None:
            print("index-1（无约束，σ_min = +inf）")
        if report.probes.total:
            p = report.probes
            print(f"π(L) 探测: 可行 {p.feasible}，不可行 {p.infeasible}，无结论 {p.inconclusive}")

    probes = report.probes
    if probes.inconclusive and not (probes.feasible or probes.infeasible):
        print("所有 π(L) 探测都没有结论", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


# =============================================================================
# convert
# =============================================================================


CONVERTERS = {
    "lagrange": dirac_to_lagrange,
    "dirac": lagrange_to_dirac,
}


def cmd_convert(source: str, target: str, out: Optional[str] = None) -> int:
    system = load_system_description(source).build()
    converted = CONVERTERS[target](system)
    desc = SystemDescription.from_system(converted)
    if out:
        save_description(desc, out)
        print(f"已写出 {out}（状态: {', '.join(converted.state_names)}）", file=sys.stderr)
    else:
        sys.stdout.write(desc.to_json())
    return EXIT_OK


# =============================================================================
# simulate
# =============================================================================


def cmd_simulate(
    source: str,
    x0: Sequence[float],
    t0: float = 0.0,
    t1: float = 1.0,
    dt: float = 1e-3,
    inputs: Optional[Sequence[str]] = None,
    out: Optional[str] = None,
    every: int = 1,
) -> int:
    system = load_system_description(source).build()
    cfg = SimConfig(t0=t0, t1=t1, dt=dt, inputs=list(inputs or []), output_every=every)
    traj = simulate(system, x0, cfg)
    if out:
        write_csv(traj, out)
    else:
        write_csv(traj, sys.stdout)

    balance = energy_balance(traj, system)
    logger.info(
        "功率平衡残差 %.3e，被动性违背 %.3e，能量漂移 %.3e",
        balance.max_balance_residual, balance.max_passivity_violation, balance.energy_drift,
    )
    if traj.failure is not None:
        print(f"仿真中途失败（已写出 {len(traj)} 行）: {traj.failure}", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


# =============================================================================
# legendre
# =============================================================================


def parse_grid(spec: str) -> np.ndarray:
    """'a:b:N' → N 个等距点"""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"网格格式应为 a:b:N，得到 '{spec}'")
    a, b, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("网格点数必须 ≥ 1")
    return np.linspace(a, b, count)


def parse_split(spec: str, size: int) -> list[int]:
    """'I/J' 形式（1 起下标，逗号分隔），返回 0 起的 J"""
    if "/" not in spec:
        raise ValueError(f"--partial 格式应为 I/J，得到 '{spec}'")
    left, right = spec.split("/", 1)
    I = [int(s) - 1 for s in left.split(",") if s.strip()]
    J = [int(s) - 1 for s in right.split(",") if s.strip()]
    if sorted(I + J) != list(range(size)):
        raise ValueError(f"I/J = {spec} 不是 1..{size} 的划分")
    return J


def _points(at: Optional[Sequence[float]], grid: Optional[str], size: int) -> list[np.ndarray]:
    if at is not None:
        point = np.asarray(at, dtype=float)
        if point.size != size:
            raise ValueError(f"--at 需要 {size} 个分量，得到 {point.size}")
        return [point]
    axis = parse_grid(grid)
    mesh = np.meshgrid(*([axis] * size), indexing="ij")
    return [np.array(p) for p in np.stack([m.ravel() for m in mesh], axis=1)]


def cmd_legendre(
    P_src: str,
    variables: Sequence[str],
    at: Optional[Sequence[float]] = None,
    grid: Optional[str] = None,
    partial: Optional[str] = None,
    check: bool = False,
) -> int:
    P = ExprTree.parse(P_src, variables)
    points = _points(at, grid, P.size)
    J = parse_split(partial, P.size) if partial else None

    header = ["input", "x*", "P*"]
    if check:
        header += ["inverse", "tilde", "tilde_grad"] if J is None else ["gradient"]
    print("\t".join(header))

    worst = 0.0
    guess = None
    for point in points:
        try:
            if J is None:
                result = legendre(P, point, guess)
            else:
                m = P.size - len(J)
                result = partial_legendre(P, J, point[:m], point[m:], guess)
        except NonConvexPoint as exc:
            print(f"非凸点: 输入 {point.tolist()}: {exc}", file=sys.stderr)
            return EXIT_MATH
        guess = result.point
        row = [_vector(point), _vector(result.point), _fmt(result.value)]
        if check:
            residuals = _check_residuals(P, point, result, J)
            worst = max(worst, *residuals)
            row += [f"{r:.3e}" for r in residuals]
        print("\t".join(row))

    if check and worst > CHECK_TOLERANCE:
        print(f"恒等式残差 {worst:.3e} 超过 {CHECK_TOLERANCE:g}", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


def _vector(v) -> str:
    return ",".join(_fmt(x) for x in np.atleast_1d(v))


def _check_residuals(P: ExprTree, point: np.ndarray, result, J) -> list[float]:
    if J is None:
        x = result.point
        return [
            legendre_inverse_check(P, x),
            abs(result.value - tilde(P, x)),
            tilde_grad_check(P, x),
        ]
    I = [i for i in range(P.size) if i not in J]
    x = np.zeros(P.size)
    x[I] = point[: len(I)]
    x[J] = result.point
    grad = P.gradient(x)[J]
    return [inf_norm(grad - point[len(I):])]


# =============================================================================
# fixtures
# =============================================================================


def cmd_fixtures(name: Optional[str] = None, out: Optional[str] = None) -> int:
    manager = FixtureManager()
    if name is None:
        for fixture in manager.list_fixtures():
            info = manager.get_fixture_info(fixture)
            flag = f"  [预期失败: {info['expected_failure']}]" if info["expected_failure"] else ""
            print(f"{fixture:<30} n={info['n']}  {info['storage']:<12}{flag}")
        return EXIT_OK
    text = manager.path_of(name).read_text(encoding="utf-8")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_MATH",
    "cmd_validate",
    "cmd_classify",
    "cmd_convert",
    "cmd_simulate",
    "cmd_legendre",
    "cmd_fixtures",
]
