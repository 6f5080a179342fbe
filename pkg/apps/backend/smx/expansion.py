"""sm 展开对象与其演算：乘积、导数、检查与余项界。"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import sympy as sp

from apps.backend.algebra.calculus import apply_box
from apps.backend.algebra.errors import NotAlmostHomogeneous, SmxError, TruncationTooSmall, UnsupportedDerivative
from apps.backend.algebra.expr import (
    DeltaOperator,
    Exact,
    Expr,
    MetricConvention,
    Mono,
    Monomial,
    Product,
    Remainder,
    Sum,
    as_exact,
    rational_part,
    scale,
)
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX, HomogeneityReport, homogeneity_analyze
from apps.backend.algebra.serialize import expr_document
from apps.backend.contracts.documents import RemainderDocument, SmExpansionDocument, SmRowDocument
from apps.backend.contracts.reports import PropertyCheck, SmCheckReport

LOGGER = logging.getLogger(__name__)

RowKey = Tuple[int, int]


@dataclass(frozen=True)
class SmRow:
    """表中的一行 m^l·log^p(m/M)·u_{l,p}。"""

    l: int
    p: int
    expr: Sum


@dataclass(frozen=True)
class SmExpansion:
    """次数 D、截断阶 L 的 sm 展开表。

    rows 只保存非零行并按 (l, p) 排序；余项只携带元数据
    (D, L+1)，从不展开为闭式。
    """

    degree: sp.Expr
    order: int
    rows: Tuple[SmRow, ...] = ()
    ambient: int = 4
    groups: Tuple[str, ...] = ("x",)
    metric: MetricConvention = field(default_factory=MetricConvention)
    tag: str = "r"
    remainder_extended: bool = False

    def __post_init__(self) -> None:
        """校验行键。"""

        if self.order < 0:
            message = f"截断阶 L={self.order} 不能为负。"
            raise ValueError(message)
        keys = [(row.l, row.p) for row in self.rows]
        if keys != sorted(set(keys)):
            raise ValueError("rows 需按 (l, p) 严格递增排列。")
        for row in self.rows:
            if row.l < 0:
                message = f"不支持负质量幂 l={row.l}。"
                raise ValueError(message)
            if row.l > self.order:
                message = f"行 l={row.l} 超过截断阶 L={self.order}。"
                raise ValueError(message)
            if row.p < 0:
                message = f"行 ({row.l}, {row.p}) 的对数幂不能为负。"
                raise ValueError(message)

    @classmethod
    def build(
        cls,
        *,
        degree: Exact,
        order: int,
        table: Mapping[RowKey, Expr],
        ambient: int = 4,
        groups: Sequence[str] = ("x",),
        metric: Optional[MetricConvention] = None,
        tag: str = "r",
        remainder_extended: bool = False,
    ) -> "SmExpansion":
        """由 {(l, p): 表达式} 构造，规范化并丢弃零行。"""

        rows = []
        for (l, p), expr in sorted(table.items()):
            normalized = normalize(expr)
            if normalized.terms:
                rows.append(SmRow(l=l, p=p, expr=normalized))
        return cls(
            degree=sp.expand(as_exact(degree)),
            order=order,
            rows=tuple(rows),
            ambient=ambient,
            groups=tuple(sorted(groups)),
            metric=metric or MetricConvention(),
            tag=tag,
            remainder_extended=remainder_extended,
        )

    @property
    def remainder(self) -> Remainder:
        """余项节点 r_{L+1}。"""

        return Remainder(
            tag=self.tag,
            degree=self.degree,
            order=self.order + 1,
            groups=self.groups,
            extended=self.remainder_extended,
        )

    def table(self) -> Dict[RowKey, Sum]:
        """{(l, p): u_{l,p}}。"""

        return {(row.l, row.p): row.expr for row in self.rows}

    def row(self, l: int, p: int = 0) -> Sum:
        """u_{l,p}，缺失时为零。"""

        return self.table().get((l, p), Sum())

    def rows_at(self, l: int) -> Dict[int, Sum]:
        """第 l 行的 {p: u_{l,p}}。"""

        return {row.p: row.expr for row in self.rows if row.l == l}

    def log_power(self, l: int) -> int:
        """P_l，空行为 0。"""

        powers = [row.p for row in self.rows if row.l == l]
        return max(powers) if powers else 0

    def mass_powers(self) -> List[int]:
        """出现的质量幂 l，升序。"""

        return sorted({row.l for row in self.rows})

    def truncate(self, order: int) -> "SmExpansion":
        """截断到更低的阶。"""

        if order > self.order:
            message = f"无法把截断阶从 {self.order} 提高到 {order}。"
            raise TruncationTooSmall(message)
        rows = tuple(row for row in self.rows if row.l <= order)
        return replace(self, order=order, rows=rows)

    def row_function(self, l: int) -> Sum:
        """Σ_p m^l·log^p(m/M)·u_{l,p}。"""

        pieces: List[Expr] = []
        for p, expr in self.rows_at(l).items():
            pieces.append(Product(factors=(Mono(mono=Monomial.build(mass_power=l, log_m_power=p)), expr)))
        return normalize(Sum(terms=tuple(pieces)))

    def as_expr(self, include_remainder: bool = True) -> Sum:
        """拼装 Σ m^l log^p(m/M) u_{l,p} [+ r_{L+1}]。"""

        pieces: List[Expr] = [self.row_function(l) for l in self.mass_powers()]
        if include_remainder:
            pieces.append(self.remainder)
        return normalize(Sum(terms=tuple(pieces)))

    def to_document(self) -> SmExpansionDocument:
        """JSON 文档 {D, L, rows, remainder}。"""

        return SmExpansionDocument(
            D=sp.sstr(self.degree),
            L=self.order,
            ambient=self.ambient,
            groups=list(self.groups),
            rows=[SmRowDocument(l=row.l, p=row.p, expr=expr_document(row.expr)) for row in self.rows],
            remainder=RemainderDocument(D=sp.sstr(self.degree), order=self.order + 1, extended=self.remainder_extended),
        )


def sm_trivial(order: int = 0, metric: Optional[MetricConvention] = None) -> SmExpansion:
    """常数函数 1 的展开：u₀ = 1，D = 0。"""

    return SmExpansion.build(
        degree=0,
        order=order,
        table={(0, 0): Mono(mono=Monomial())},
        ambient=1,
        groups=(),
        metric=metric,
        tag="1",
    )


def _product_ambient(s1: SmExpansion, s2: SmExpansion) -> int:
    if not s1.groups:
        return s2.ambient
    if not s2.groups:
        return s1.ambient
    if set(s1.groups) & set(s2.groups):
        return max(s1.ambient, s2.ambient)
    return s1.ambient + s2.ambient


def sm_product(
    s1: SmExpansion,
    s2: SmExpansion,
    *,
    ambient: Optional[int] = None,
    order: Optional[int] = None,
    tag: Optional[str] = None,
) -> SmExpansion:
    """两个 sm 展开的乘积。

    u_l = Σ_{j ≤ l} u_{1,j}·u_{2,l-j}；对数幂相加，次数 D1 + D2。
    余项由 r1·r2、r1·Σu2、Σu1·r2 与 l ∈ [L+1, L1+L2] 的溢出项组成，
    其中阶数最低者决定结果的消失阶 L+1。

    Parameters
    ----------
    s1, s2: SmExpansion
        两个因子。
    ambient: Optional[int]
        结果的环境维数；变量组相关时（例如 w = x - y）需显式给出。
    order: Optional[int]
        结果截断阶，默认 min(L1, L2)。
    tag: Optional[str]
        结果余项标签。

    Raises
    ------
    TruncationTooSmall
        order 超过 min(L1, L2)。
    IllDefinedProduct
        行的逐点乘积不良定义。
    """

    if s1.groups and s2.groups and (s1.metric.sign, s1.metric.dimension) != (s2.metric.sign, s2.metric.dimension):
        raise ValueError("两个因子的度规约定不一致。")
    limit = min(s1.order, s2.order)
    target = limit if order is None else order
    if target > limit:
        message = f"乘积截断阶 {target} 超过因子截断阶的最小值 {limit}。"
        raise TruncationTooSmall(message)
    collected: Dict[RowKey, List[Expr]] = defaultdict(list)
    for left in s1.rows:
        for right in s2.rows:
            l = left.l + right.l
            if l > target:
                continue
            collected[(l, left.p + right.p)].append(Product(factors=(left.expr, right.expr)))
    table = {key: Sum(terms=tuple(items)) for key, items in collected.items()}
    remainder_orders = {
        "r1*r2": s1.order + s2.order + 2,
        "r1*u2": s1.order + 1,
        "u1*r2": s2.order + 1,
        "overflow": target + 1,
    }
    result = SmExpansion.build(
        degree=s1.degree + s2.degree,
        order=min(remainder_orders.values()) - 1,
        table=table,
        ambient=ambient if ambient is not None else _product_ambient(s1, s2),
        groups=tuple(sorted(set(s1.groups) | set(s2.groups))),
        metric=s1.metric if s1.groups else s2.metric,
        tag=tag or f"{s1.tag}{s2.tag}",
    )
    LOGGER.debug(
        "sm product assembled",
        extra={"degree": sp.sstr(result.degree), "order": result.order, "rows": len(result.rows)},
    )
    return result


def sm_power(s: SmExpansion, exponent: int, *, order: Optional[int] = None) -> SmExpansion:
    """s 的 n 次幂，按左结合逐次相乘。"""

    if exponent < 1:
        message = f"幂次 {exponent} 至少为 1。"
        raise ValueError(message)
    result = s if order is None else s.truncate(order)
    for _ in range(exponent - 1):
        result = sm_product(result, s, order=order, tag=s.tag)
    return result


def sm_sum(s1: SmExpansion, s2: SmExpansion) -> SmExpansion:
    """同次数展开之和，截断阶取较小者。"""

    if sp.expand(s1.degree - s2.degree) != 0:
        message = f"次数 {s1.degree} 与 {s2.degree} 不同，和不满足 sm 展开。"
        raise NotAlmostHomogeneous(message)
    target = min(s1.order, s2.order)
    collected: Dict[RowKey, List[Expr]] = defaultdict(list)
    for row in s1.rows + s2.rows:
        if row.l <= target:
            collected[(row.l, row.p)].append(row.expr)
    return SmExpansion.build(
        degree=s1.degree,
        order=target,
        table={key: Sum(terms=tuple(items)) for key, items in collected.items()},
        ambient=max(s1.ambient, s2.ambient),
        groups=tuple(sorted(set(s1.groups) | set(s2.groups))),
        metric=s1.metric,
        tag=s1.tag,
    )


def sm_scale(s: SmExpansion, coeff: Exact) -> SmExpansion:
    """标量倍。"""

    factor = as_exact(coeff)
    return SmExpansion.build(
        degree=s.degree,
        order=s.order,
        table={(row.l, row.p): scale(row.expr, factor) for row in s.rows},
        ambient=s.ambient,
        groups=s.groups,
        metric=s.metric,
        tag=s.tag,
        remainder_extended=s.remainder_extended,
    )


DerivativeSpec = Union[DeltaOperator, Sequence[Tuple[str, ...]]]


def _invariants(operator: DerivativeSpec) -> Tuple[Tuple[str, ...], ...]:
    if isinstance(operator, DeltaOperator):
        if operator.multi_index is not None:
            if any(operator.multi_index):
                raise UnsupportedDerivative("带自由指标的坐标导数不在不变量微积分内。")
            return ()
        return operator.invariants
    return tuple(tuple(item) for item in operator)


def sm_derivative(s: SmExpansion, operator: DerivativeSpec) -> SmExpansion:
    """逐行施加不变量微分算子，次数增加 |β|。

    Parameters
    ----------
    s: SmExpansion
        输入展开。
    operator: DerivativeSpec
        DeltaOperator 或不变量序列，例如 [("box", "x")]。

    Raises
    ------
    UnsupportedDerivative
        自由指标导数，或 ∂_g·∂_h（g ≠ h）这类无法在行上闭式表达的缩并。
    """

    invariants = _invariants(operator)
    table: Dict[RowKey, Expr] = dict(s.table())
    for item in invariants:
        if item[0] == "box":
            group = item[1]
        elif item[0] == "dot" and item[1] == item[2]:
            group = item[1]
        else:
            message = f"不变量 {item} 无法逐行表达为 □。"
            raise UnsupportedDerivative(message)
        if s.groups and group not in s.groups:
            message = f"变量组 {group} 不在展开的变量组 {s.groups} 中。"
            raise UnsupportedDerivative(message)
        table = {key: apply_box(group, expr, s.metric) for key, expr in table.items()}
    return SmExpansion.build(
        degree=s.degree + 2 * len(invariants),
        order=s.order,
        table=table,
        ambient=s.ambient,
        groups=s.groups,
        metric=s.metric,
        tag=f"d{s.tag}" if invariants else s.tag,
    )


def _mass_free(expr: Expr) -> bool:
    return all(term.scalar.is_mass_free() for term in atoms(expr))


def _check(name: str, passed: bool, detail: str = "") -> PropertyCheck:
    return PropertyCheck(name=name, passed=bool(passed), detail="" if passed else detail)


def sm_joint_scaling(s: SmExpansion, n_max: int = DEFAULT_N_MAX) -> Dict[int, HomogeneityReport]:
    """每个质量幂 l 上 (E - m∂_m + D)^N (Σ_p m^l log^p u_{l,p}) = 0 的数据。

    Raises
    ------
    NotAlmostHomogeneous
        某行的联合标度次数不是 D。
    """

    result: Dict[int, HomogeneityReport] = {}
    for l in s.mass_powers():
        report = homogeneity_analyze(s.row_function(l), with_mass=True, n_max=n_max)
        if sp.expand(report.degree - s.degree) != 0:
            message = f"第 {l} 行的联合标度次数 {report.degree} 不等于 D={s.degree}。"
            raise NotAlmostHomogeneous(message)
        result[l] = report
    return result


def sm_check(s: SmExpansion, n_max: int = DEFAULT_N_MAX) -> SmCheckReport:
    """逐条检查 (A)-(E)，以及每行的联合标度。

    不抛出性质失败；失败原因写入对应条目的 detail。
    """

    checks: List[PropertyCheck] = []
    zero_rows = s.rows_at(0)
    checks.append(
        _check(
            "A",
            set(zero_rows) <= {0} and all(_mass_free(expr) for expr in zero_rows.values()),
            f"u₀ 的对数幂集合为 {sorted(zero_rows)}，需仅含 p=0 且与 m 无关。",
        ),
    )
    impure = [f"({row.l},{row.p})" for row in s.rows if not _mass_free(row.expr)]
    checks.append(_check("B", not impure, f"行 {', '.join(impure)} 含 m 或 log(m/M)。"))
    inferred: Set[sp.Expr] = set()
    for row in s.rows:
        name = f"C[{row.l},{row.p}]"
        target = sp.expand(s.degree - row.l)
        try:
            report = homogeneity_analyze(row.expr, n_max=n_max)
        except SmxError as error:
            checks.append(_check(name, False, str(error)))
            continue
        inferred.add(sp.expand(report.degree + row.l))
        checks.append(
            _check(name, sp.expand(report.degree - target) == 0, f"次数 {report.degree} ≠ D - l = {target}。"),
        )
    remainder = s.remainder
    # 余项的联合次数须与各行推出的 sd(u_l) + l 一致
    checks.append(
        _check(
            "D",
            all(sp.expand(value - remainder.degree) == 0 for value in inferred),
            f"各行给出的联合次数 {sorted(map(sp.sstr, inferred))} 与余项次数 {remainder.degree} 不一致。",
        ),
    )
    bound = sm_remainder_bound(s)
    checks.append(
        _check(
            "E",
            not remainder.extended or rational_part(bound) < s.ambient,
            f"余项标记为已直接延拓，但其 scaling degree 上界 {bound} 不低于 k={s.ambient}。",
        ),
    )
    for l in s.mass_powers():
        try:
            report = homogeneity_analyze(s.row_function(l), with_mass=True, n_max=n_max)
            passed = sp.expand(report.degree - s.degree) == 0
            detail = f"联合标度次数 {report.degree} ≠ D={s.degree}。"
        except SmxError as error:
            passed, detail = False, str(error)
        checks.append(_check(f"joint[{l}]", passed, detail))
    report = SmCheckReport(
        degree=sp.sstr(s.degree),
        order=s.order,
        ambient=s.ambient,
        passed=all(item.passed for item in checks),
        checks=checks,
    )
    LOGGER.debug("sm check finished", extra={"passed": report.passed, "failures": report.failures()})
    return report


def sm_remainder_bound(s: SmExpansion) -> sp.Expr:
    """余项 scaling degree 的上界 D - (L+1)。"""

    return sp.expand(s.degree - (s.order + 1))


def sm_rows_text(s: SmExpansion) -> Dict[str, str]:
    """{"l,p": 文本}，用于报告与命令行输出。"""

    from apps.backend.algebra.serialize import render_text  # noqa: WPS433

    return {f"{row.l},{row.p}": render_text(row.expr) for row in s.rows}


def odd_rows(s: SmExpansion) -> Iterable[SmRow]:
    """奇数质量幂的非零行。"""

    return [row for row in s.rows if row.l % 2]


__all__ = [
    "RowKey",
    "SmRow",
    "SmExpansion",
    "sm_trivial",
    "sm_product",
    "sm_power",
    "sm_sum",
    "sm_scale",
    "sm_derivative",
    "sm_joint_scaling",
    "sm_check",
    "sm_remainder_bound",
    "sm_rows_text",
    "odd_rows",
]
