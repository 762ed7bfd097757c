"""
代数约束的提取与分类

- dirac:    B(x)ᵀ e_S = 0，e_S 由储能关系给出
- lagrange: x ∈ π(L)
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from phdae.config import current_settings
from phdae.errors import DomainError, Inconclusive
from phdae.expr import ExprTree, MatrixExpr
from phdae.geometry import (
    ExplicitHamiltonian,
    GeneratingFunction,
    MorseFamily,
    lagrange_constraint_probe,
    projection_residual,
    sample_points,
)

from .phsystem import PHSystem

logger = logging.getLogger(__name__)

DIRAC = "dirac"
LAGRANGE = "lagrange"


@dataclass
class AlgebraicConstraint:
    """
    一条代数约束

    tree 非空时残差为 |tree(point)|，point 的坐标由 coordinates 给出；
    否则用 evaluator 数值计算（x ∈ π(L) 这类没有符号形式的约束）。
    """
    kind: str
    label: str
    coordinates: tuple[str, ...]
    tree: Optional[ExprTree] = None
    verdict: str = "symbolic"
    evaluator: Optional[Callable[[np.ndarray], float]] = field(default=None, repr=False)

    def residual(self, point) -> float:
        if self.tree is not None:
            return abs(self.tree.evaluate(point))
        return float(self.evaluator(np.asarray(point, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "class": self.kind,
            "label": self.label,
            "coordinates": list(self.coordinates),
            "residual": self.tree.to_source() if self.tree is not None else None,
            "verdict": self.verdict,
        }


@dataclass
class ProbeSummary:
    """π(L) 探测统计"""
    feasible: int = 0
    infeasible: int = 0
    inconclusive: int = 0
    witnesses: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.feasible + self.infeasible + self.inconclusive

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "infeasible": self.infeasible,
            "inconclusive": self.inconclusive,
        }


@dataclass
class ConstraintReport:
    system: str
    constraints: list[AlgebraicConstraint] = field(default_factory=list)
    probes: ProbeSummary = field(default_factory=ProbeSummary)

    @property
    def dirac(self) -> list[AlgebraicConstraint]:
        return [c for c in self.constraints if c.kind == DIRAC]

    @property
    def lagrange(self) -> list[AlgebraicConstraint]:
        return [c for c in self.constraints if c.kind == LAGRANGE]

    @property
    def classes(self) -> set[str]:
        return {c.kind for c in self.constraints}

    @property
    def inconclusive(self) -> bool:
        return any(c.verdict == "inconclusive" for c in self.constraints)

    @property
    def empty(self) -> bool:
        return not self.constraints

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "dirac": [c.to_dict() for c in self.dirac],
            "lagrange": [c.to_dict() for c in self.lagrange],
            "probes": self.probes.to_dict(),
        }


# =============================================================================
# Dirac 约束
# =============================================================================


def _dirac_trees(sys: PHSystem) -> tuple[list[ExprTree], tuple[str, ...]]:
    """Bᵀ(x) e_S 的表达式树，以及它们所在的坐标"""
    storage = sys.storage
    if sys.k == 0:
        return [], sys.state_names

    if isinstance(storage, ExplicitHamiltonian):
        effort = MatrixExpr.column(storage.H.gradient_trees(), sys.state_names)
        return list((sys.dirac.B.transpose() @ effort).entries), sys.state_names

    if isinstance(storage, GeneratingFunction):
        chart = storage.V.variables
        m = len(storage.I)
        mapping = {}
        efforts: list[ExprTree] = [None] * storage.n
        for pos, i in enumerate(storage.I):
            efforts[i] = storage.V.derivative(pos)
        for pos, j in enumerate(storage.J):
            mapping[sys.state_names[j]] = -storage.V.derivative(m + pos)
            efforts[j] = ExprTree.variable(chart[m + pos], chart)
        B = sys.dirac.B.substitute(mapping, chart)
        return list((B.transpose() @ MatrixExpr.column(efforts, chart)).entries), chart

    joint = storage.F.variables
    B = sys.dirac.B.rebase(joint)
    effort = MatrixExpr.column([storage.F.derivative(i) for i in range(storage.n)], joint)
    return list((B.transpose() @ effort).entries), joint


# =============================================================================
# 拉格朗日约束
# =============================================================================


def stationary_rows(storage) -> list[int]:
    """
    内部坐标无法从中解出的关系（纯状态方程）

    GeneratingFunction: ∂V/∂e_j 不含任何共态，返回 J 中的位置；
    MorseFamily: ∂F/∂λ_a 不含任何参数，返回参数位置。
    """
    if isinstance(storage, GeneratingFunction):
        tree, first = storage.V, len(storage.I)
    elif isinstance(storage, MorseFamily):
        tree, first = storage.F, storage.n
    else:
        return []
    internal = tree.variables[first:]
    rows = []
    for pos in range(len(internal)):
        d = tree.derivative(first + pos)
        if not any(d.depends_on(name) for name in internal):
            rows.append(pos)
    return rows


def _stationary_constraints(sys: PHSystem) -> list[AlgebraicConstraint]:
    storage = sys.storage
    names = sys.state_names
    result = []
    for pos in stationary_rows(storage):
        if isinstance(storage, GeneratingFunction):
            j = storage.J[pos]
            d = storage.V.derivative(len(storage.I) + pos).rebase(names)
            tree = ExprTree.variable(names[j], names) + d
        else:
            tree = storage.F.derivative(storage.n + pos).rebase(names)
        if tree.is_constant:
            continue
        result.append(AlgebraicConstraint(
            kind=LAGRANGE, label=f"{tree.to_source()} = 0", coordinates=names, tree=tree
        ))
    return result


def extract_constraints(
    sys: PHSystem,
    samples=None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
) -> ConstraintReport:
    """
    提取并分类代数约束

    Dirac 约束给出符号残差；拉格朗日约束先找纯状态方程，再在采样盒上
    逐点探测 π(L)。探测到不可行点而没有符号约束能解释时，记一条数值约束；
    探测没有结论的点记为 inconclusive 条目。
    """
    report = ConstraintReport(system=sys.name)
    trees, coords = _dirac_trees(sys)
    for tree in trees:
        if tree.is_zero:
            continue
        report.constraints.append(AlgebraicConstraint(
            kind=DIRAC, label=tree.to_source(), coordinates=coords, tree=tree
        ))

    storage = sys.storage
    if isinstance(storage, ExplicitHamiltonian):
        return report

    symbolic = _stationary_constraints(sys)
    report.constraints.extend(symbolic)

    s = current_settings()
    points = [np.asarray(p, dtype=float) for p in (samples or [])]
    points.extend(sample_points(sys.n, sys.sample_box, s.sample_count if count is None else count, seed))
    for x in points:
        try:
            probe = lagrange_constraint_probe(storage, x, seed=seed)
        except Inconclusive:
            report.probes.inconclusive += 1
            continue
        except DomainError as exc:
            logger.warning("跳过探测点 %s: %s", x.tolist(), exc)
            continue
        if probe.feasible:
            report.probes.feasible += 1
            report.probes.witnesses.append((x, probe.witness))
        else:
            report.probes.infeasible += 1

    if report.probes.infeasible and not symbolic:
        report.constraints.append(AlgebraicConstraint(
            kind=LAGRANGE,
            label="x ∈ π(L)",
            coordinates=sys.state_names,
            verdict="numeric",
            evaluator=lambda x: projection_residual(storage, x, seed),
        ))
    if report.probes.inconclusive:
        report.constraints.append(AlgebraicConstraint(
            kind=LAGRANGE,
            label=f"x ∈ π(L)（{report.probes.inconclusive} 个点无结论）",
            coordinates=sys.state_names,
            verdict="inconclusive",
            evaluator=lambda x: projection_residual(storage, x, seed),
        ))
    return report
