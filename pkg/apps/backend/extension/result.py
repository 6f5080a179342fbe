"""延拓结果与 δ 反项基。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp

from apps.backend.algebra.calculus import reduce_away_from_origin
from apps.backend.algebra.expr import DeltaCT, DeltaOperator, Expr, Product, Sum, const, delta, rational_part
from apps.backend.algebra.normal import equivalent, normalize
from apps.backend.algebra.scaling import HomogeneityReport
from apps.backend.algebra.serialize import expr_document
from apps.backend.contracts.documents import CountertermDocument, ExtensionDocument
from apps.backend.contracts.reports import CountertermItem, HomogeneityRecord

LOGGER = logging.getLogger(__name__)

METHODS = ("direct", "diffren", "moment", "MS")


@dataclass(frozen=True)
class CountertermPattern:
    """带自由常数的反项 C·m^l·log^p(m/M)·P(∂)δ。

    expr 中的常数系数置 1；对称化后的模式可以是多个 DeltaCT 之和，
    例如 (□x + □y)δ。
    """

    constant: str
    expr: Expr
    mass_power: int = 0
    log_m_power: int = 0
    order: int = 0

    @property
    def symbol(self) -> sp.Symbol:
        """自由常数的符号。"""

        return sp.Symbol(self.constant)

    def label(self) -> str:
        """算子部分的可读标签。"""

        labels = sorted({node.operator.label() for node in self.expr.walk() if isinstance(node, DeltaCT)})
        return " + ".join(labels)

    def as_item(self) -> CountertermItem:
        """报告条目。"""

        return CountertermItem(
            constant=self.constant,
            operator=self.label(),
            mass_power=self.mass_power,
            log_m_power=self.log_m_power,
            order=self.order,
        )

    def to_document(self) -> CountertermDocument:
        return CountertermDocument(constant=self.constant, expr=expr_document(self.expr))


@dataclass(frozen=True)
class ExtensionResult:
    """延拓结果：extended 不含反项，反项基单独给出。"""

    extended: Expr
    method: str
    ambient: int
    counterterm_basis: Tuple[CountertermPattern, ...] = ()
    homogeneity: Optional[HomogeneityReport] = None
    moment_coefficients: Dict[int, sp.Expr] = field(default_factory=dict)
    brackets: Dict[int, sp.Expr] = field(default_factory=dict)
    pole_order: Optional[int] = None
    regulator: Optional[sp.Symbol] = None
    eta: Optional[sp.Expr] = None

    def __post_init__(self) -> None:
        """方法标签必须已知。"""

        if self.method not in METHODS:
            message = f"未知的延拓方法 {self.method!r}，可选 {METHODS}。"
            raise ValueError(message)

    def counterterms(self) -> Sum:
        """Σ C_i·模式_i。"""

        pieces = [Product(factors=(const(item.symbol), item.expr)) for item in self.counterterm_basis]
        return normalize(Sum(terms=tuple(pieces)))

    def with_counterterms(self) -> Sum:
        """extended + Σ C_i·模式_i。"""

        return normalize(Sum(terms=(self.extended, self.counterterms())))

    def restriction(self) -> Sum:
        """限制到原点之外的值。"""

        return reduce_away_from_origin(self.with_counterterms(), self.ambient)

    def restricts_to(self, source: Expr) -> bool:
        """离开原点时是否重现输入。"""

        return equivalent(self.restriction(), source)

    def to_document(self) -> ExtensionDocument:
        homogeneity = None
        if self.homogeneity is not None:
            homogeneity = HomogeneityRecord(**self.homogeneity.as_payload())
        return ExtensionDocument(
            method=self.method,
            extended=expr_document(self.extended),
            counterterm_basis=[item.to_document() for item in self.counterterm_basis],
            homogeneity=homogeneity,
            brackets={str(order): sp.sstr(value) for order, value in sorted(self.brackets.items())},
            pole_order=self.pole_order,
        )


def _quadratic_invariants(groups: Sequence[str]) -> List[Tuple[str, ...]]:
    ordered = sorted(groups)
    items: List[Tuple[str, ...]] = [("box", group) for group in ordered]
    for index, left in enumerate(ordered):
        for right in ordered[index + 1 :]:
            items.append(("dot", left, right))
    return items


def _rename(invariant: Tuple[str, ...], mapping: Dict[str, str]) -> Tuple[str, ...]:
    if invariant[0] == "box":
        return ("box", mapping[invariant[1]])
    left, right = sorted((mapping[invariant[1]], mapping[invariant[2]]))
    return ("dot", left, right)


def invariant_operators(order: int, groups: Sequence[str], symmetric: bool = True) -> List[Tuple[DeltaOperator, ...]]:
    """阶为 order 的不变量微分算子；symmetric 时返回变量组置换下的轨道。

    每个元素是一个轨道（元组中的算子之和构成一个基元）。
    """

    if order < 0 or order % 2:
        return []
    candidates = [
        DeltaOperator(invariants=tuple(sorted(choice)))
        for choice in combinations_with_replacement(_quadratic_invariants(groups), order // 2)
    ]
    if not symmetric or len(groups) < 2:
        return [(operator,) for operator in candidates]
    ordered = sorted(groups)
    orbits: List[Tuple[DeltaOperator, ...]] = []
    seen: set = set()
    for operator in candidates:
        if operator in seen:
            continue
        orbit = set()
        for image in permutations(ordered):
            mapping = dict(zip(ordered, image))
            orbit.add(DeltaOperator(invariants=tuple(sorted(_rename(item, mapping) for item in operator.invariants))))
        seen |= orbit
        orbits.append(tuple(sorted(orbit, key=lambda item: item.invariants)))
    return orbits


def coordinate_operators(order: int, ambient: int) -> List[Tuple[DeltaOperator, ...]]:
    """坐标多重指标 ∂^β，|β| = order。"""

    if order < 0:
        return []
    result = []
    for choice in combinations_with_replacement(range(ambient), order):
        index = [0] * ambient
        for axis in choice:
            index[axis] += 1
        result.append((DeltaOperator(multi_index=tuple(index)),))
    return result


def row_counterterms(
    degree: sp.Expr,
    ambient: int,
    groups: Sequence[str],
    *,
    symmetric: bool = True,
    covariant: bool = True,
    prefix: str = "C",
    start: int = 0,
) -> List[CountertermPattern]:
    """单行（与 m 无关）的反项：|β| = degree - k 的 P(∂)δ。"""

    excess = rational_part(degree) - ambient
    if excess < 0 or not excess.is_Integer:
        return []
    return _patterns(
        order=int(excess),
        ambient=ambient,
        groups=groups,
        symmetric=symmetric,
        covariant=covariant,
        prefix=prefix,
        start=start,
        mass_power=0,
        log_m_power=0,
    )


def _patterns(
    *,
    order: int,
    ambient: int,
    groups: Sequence[str],
    symmetric: bool,
    covariant: bool,
    prefix: str,
    start: int,
    mass_power: int,
    log_m_power: int,
) -> List[CountertermPattern]:
    operators = invariant_operators(order, groups, symmetric) if covariant else coordinate_operators(order, ambient)
    support = tuple(sorted(groups))
    result = []
    for offset, orbit in enumerate(operators):
        nodes = tuple(
            delta(support, ambient, operator=operator, mass_power=mass_power, log_m_power=log_m_power)
            for operator in orbit
        )
        result.append(
            CountertermPattern(
                constant=f"{prefix}{start + offset}",
                expr=normalize(Sum(terms=nodes)),
                mass_power=mass_power,
                log_m_power=log_m_power,
                order=order,
            ),
        )
    return result


def counterterm_basis(
    degree: int,
    ambient: int,
    *,
    groups: Sequence[str] = ("x",),
    symmetric: bool = True,
    covariant: bool = True,
    max_log_power: int = 1,
    prefix: str = "C",
    start: int = 0,
) -> List[CountertermPattern]:
    """枚举 m^l·log^p(m/M)·P(∂)δ，|β| + l = D - k。

    l = 0 的项不带 log(m/M)（u₀ 与 m 无关），l > 0 的项 p ≤ max_log_power。
    常数按 (l 降序, p 升序, 算子) 依次编号。

    Parameters
    ----------
    degree: int
        展开次数 D。
    ambient: int
        环境维数 k = d(n-1)。
    groups: Sequence[str]
        δ 的支撑变量组。
    symmetric: bool
        是否对变量组置换对称化。
    covariant: bool
        True 时只生成 □_i、∂_i·∂_j 组成的不变量算子。
    max_log_power: int
        l > 0 项允许的最高 log(m/M) 幂次。

    Returns
    -------
    List[CountertermPattern]
        D < k 时为空。
    """

    excess = degree - ambient
    if excess < 0:
        return []
    result: List[CountertermPattern] = []
    for mass_power in range(excess, -1, -1):
        logs = range(max_log_power + 1) if mass_power else range(1)
        for log_m_power in logs:
            patterns = _patterns(
                order=excess - mass_power,
                ambient=ambient,
                groups=groups,
                symmetric=symmetric,
                covariant=covariant,
                prefix=prefix,
                start=start + len(result),
                mass_power=mass_power,
                log_m_power=log_m_power,
            )
            result.extend(patterns)
    LOGGER.debug("Counterterm basis enumerated", extra={"degree": degree, "ambient": ambient, "size": len(result)})
    return result


__all__ = [
    "METHODS",
    "CountertermPattern",
    "ExtensionResult",
    "invariant_operators",
    "coordinate_operators",
    "row_counterterms",
    "counterterm_basis",
]
