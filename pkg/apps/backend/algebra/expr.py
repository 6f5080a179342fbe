"""表达式树定义：分级单项式与结构节点。

单项式记录精确系数、质量幂 m^l、log(m/M) 的幂次，以及按变量组索引的
不变量幂 X_i^a 与 log(M²X_i)^q。结构节点（直接延拓、矩散度、□ 算子、
δ 反项、不透明余项）以冻结 dataclass 表示，可安全地在线程间共享。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Mapping, Optional, Tuple, Union

import sympy as sp

LOGGER = logging.getLogger(__name__)

ZERO = sp.Integer(0)
ONE = sp.Integer(1)

Exact = Union[int, sp.Expr, str]


def as_exact(value: Exact) -> sp.Expr:
    """将输入转换为 sympy 精确表达式，拒绝浮点数。

    Parameters
    ----------
    value: Exact
        整数、sympy 表达式或可解析字符串（如 "p/q"）。

    Returns
    -------
    sp.Expr
        精确的 sympy 表达式。
    """

    if isinstance(value, float):
        message = f"系数 {value!r} 为浮点数，引擎只接受精确值。"
        raise TypeError(message)
    expr = sp.sympify(value)
    if expr.has(sp.Float):
        message = f"表达式 {expr} 含浮点数，引擎只接受精确值。"
        raise TypeError(message)
    return expr


def rational_part(exponent: Exact) -> sp.Rational:
    """返回指数中与正则参数无关的有理部分。

    指数是有理数加正则符号的整系数线性组合，因此所有自由符号都视为
    正则参数并置零。
    """

    expr = sp.expand(as_exact(exponent))
    if expr.free_symbols:
        expr = expr.subs({symbol: 0 for symbol in expr.free_symbols})
    if not expr.is_Rational:
        message = f"指数 {exponent} 的有理部分不是有理数。"
        raise TypeError(message)
    return sp.Rational(expr)


@dataclass(frozen=True)
class MetricConvention:
    """度规约定：sign=-1 为 X=-(x²-i0)，sign=+1 为欧氏 X=|x|²。"""

    sign: int = -1
    dimension: int = 4
    vertices: int = 2

    def __post_init__(self) -> None:
        """校验符号与维数。"""

        if self.sign not in {-1, 1}:
            message = f"sign={self.sign} 非法，仅支持 -1 或 +1。"
            raise ValueError(message)
        if self.dimension < 1:
            message = f"dimension={self.dimension} 必须为正整数。"
            raise ValueError(message)
        if self.vertices < 2:
            message = f"vertices={self.vertices} 至少为 2。"
            raise ValueError(message)

    @property
    def ambient(self) -> int:
        """相对坐标空间维数 k = d·(n-1)。"""

        return self.dimension * (self.vertices - 1)

    @classmethod
    def minkowski(cls, dimension: int = 4, vertices: int = 2) -> "MetricConvention":
        """返回闵氏约定。"""

        return cls(sign=-1, dimension=dimension, vertices=vertices)

    @classmethod
    def euclidean(cls, dimension: int = 4, vertices: int = 2) -> "MetricConvention":
        """返回欧氏约定，数值配对只在该约定下进行。"""

        return cls(sign=1, dimension=dimension, vertices=vertices)


@dataclass(frozen=True)
class GroupPower:
    """单个变量组上的因子 X_g^power · log(M²X_g)^log_power。"""

    group: str
    power: sp.Expr
    log_power: int

    def is_trivial(self) -> bool:
        """幂与对数幂均为零时该因子等于 1。"""

        return self.power == 0 and self.log_power == 0

    def is_smooth(self) -> bool:
        """非负整数幂且无对数时在原点光滑。"""

        return self.log_power == 0 and self.power.is_Integer and self.power >= 0


@dataclass(frozen=True)
class Monomial:
    """分级单项式，构造后总是规范形式（组有序、无平凡因子）。"""

    coeff: sp.Expr = ONE
    mass_power: sp.Expr = ZERO
    log_m_power: int = 0
    factors: Tuple[GroupPower, ...] = ()

    @classmethod
    def build(
        cls,
        *,
        coeff: Exact = 1,
        mass_power: Exact = 0,
        log_m_power: int = 0,
        factors: Optional[Mapping[str, Tuple[Exact, int]]] = None,
    ) -> "Monomial":
        """按规范形式构造单项式。

        Parameters
        ----------
        coeff: Exact
            精确系数，可含符号常数。
        mass_power: Exact
            m 的幂次，可含正则参数的线性项。
        log_m_power: int
            log(m/M) 的幂次。
        factors: Optional[Mapping[str, Tuple[Exact, int]]]
            变量组到 (X 的指数, log 幂次) 的映射。

        Returns
        -------
        Monomial
            规范化后的单项式。
        """

        if log_m_power < 0:
            message = f"log_m_power={log_m_power} 不能为负。"
            raise ValueError(message)
        normalized = []
        for group, (power, log_power) in sorted((factors or {}).items()):
            if log_power < 0:
                message = f"变量组 {group} 的对数幂 {log_power} 不能为负。"
                raise ValueError(message)
            item = GroupPower(group=group, power=sp.expand(as_exact(power)), log_power=int(log_power))
            if not item.is_trivial():
                normalized.append(item)
        return cls(
            coeff=as_exact(coeff),
            mass_power=sp.expand(as_exact(mass_power)),
            log_m_power=int(log_m_power),
            factors=tuple(normalized),
        )

    def factor_map(self) -> dict[str, Tuple[sp.Expr, int]]:
        """返回组到 (指数, 对数幂) 的字典。"""

        return {item.group: (item.power, item.log_power) for item in self.factors}

    def groups(self) -> frozenset[str]:
        """单项式依赖的变量组集合。"""

        return frozenset(item.group for item in self.factors)

    def factor(self, group: str) -> Optional[GroupPower]:
        """返回指定组的因子，不存在时为 None。"""

        for item in self.factors:
            if item.group == group:
                return item
        return None

    def times(self, other: "Monomial") -> "Monomial":
        """指数相加的乘积。"""

        merged = self.factor_map()
        for group, (power, log_power) in other.factor_map().items():
            base_power, base_log = merged.get(group, (ZERO, 0))
            merged[group] = (base_power + power, base_log + log_power)
        return Monomial.build(
            coeff=self.coeff * other.coeff,
            mass_power=self.mass_power + other.mass_power,
            log_m_power=self.log_m_power + other.log_m_power,
            factors=merged,
        )

    def with_coeff(self, coeff: Exact) -> "Monomial":
        """替换系数。"""

        return Monomial(
            coeff=as_exact(coeff),
            mass_power=self.mass_power,
            log_m_power=self.log_m_power,
            factors=self.factors,
        )

    def split(self) -> Tuple["Monomial", "Monomial"]:
        """拆成 (系数与质量部分, 系数为 1 的 x 部分)。"""

        scalar = Monomial(coeff=self.coeff, mass_power=self.mass_power, log_m_power=self.log_m_power)
        x_part = Monomial(factors=self.factors)
        return scalar, x_part

    def is_unit(self) -> bool:
        """系数为 1 且没有任何因子。"""

        return self.coeff == 1 and self.mass_power == 0 and self.log_m_power == 0 and not self.factors

    def is_mass_free(self) -> bool:
        """不含 m 与 log(m/M)。"""

        return self.mass_power == 0 and self.log_m_power == 0

    def x_key(self) -> Tuple:
        """不含系数的排序/合并键。"""

        factor_key = tuple(
            (item.group, rational_part(item.power), sp.sstr(item.power), item.log_power)
            for item in self.factors
        )
        return (
            rational_part(self.mass_power),
            sp.sstr(self.mass_power),
            self.log_m_power,
            factor_key,
        )


class Expr:
    """所有表达式节点的公共基类。"""

    kind: ClassVar[str] = "expr"

    def __add__(self, other: "Expr") -> "Expr":
        return Sum(terms=(self, _coerce(other)))

    def __radd__(self, other: object) -> "Expr":
        return Sum(terms=(_coerce(other), self))

    def __sub__(self, other: "Expr") -> "Expr":
        return Sum(terms=(self, scale(_coerce(other), -1)))

    def __neg__(self) -> "Expr":
        return scale(self, -1)

    def __mul__(self, other: object) -> "Expr":
        return Product(factors=(self, _coerce(other)))

    def __rmul__(self, other: object) -> "Expr":
        return Product(factors=(_coerce(other), self))

    def children(self) -> Tuple["Expr", ...]:
        """直接子节点。"""

        return ()

    def walk(self) -> Iterator["Expr"]:
        """先序遍历全部节点。"""

        yield self
        for child in self.children():
            yield from child.walk()


@dataclass(frozen=True)
class Sum(Expr):
    """有限和。"""

    kind: ClassVar[str] = "sum"
    terms: Tuple[Expr, ...] = ()

    def children(self) -> Tuple[Expr, ...]:
        return self.terms


@dataclass(frozen=True)
class Mono(Expr):
    """单项式叶节点。"""

    kind: ClassVar[str] = "mono"
    mono: Monomial = field(default_factory=Monomial)


@dataclass(frozen=True)
class Product(Expr):
    """形式乘积，用于不同变量组的因子或单项式乘结构节点。"""

    kind: ClassVar[str] = "product"
    factors: Tuple[Expr, ...] = ()

    def children(self) -> Tuple[Expr, ...]:
        return self.factors


@dataclass(frozen=True)
class Overline(Expr):
    """直接延拓标记，moment=l 表示 z^l·child 的直接延拓。

    moment>0 的节点只作为同阶 MomentDiv 的直接子节点出现，此时 Euler
    算子直接穿过该节点作用在 child 上。
    """

    kind: ClassVar[str] = "overline"
    child: Expr = field(default_factory=Sum)
    ambient: int = 4
    moment: int = 0

    def __post_init__(self) -> None:
        """检查 sd(child) - moment < ambient 以及反项位置。"""

        from apps.backend.algebra.scaling import scaling_degree  # noqa: WPS433 - 避免循环导入

        if self.moment < 0:
            message = f"moment={self.moment} 不能为负。"
            raise ValueError(message)
        _reject_origin_counterterms(node=self.child, ambient=self.ambient, owner="Overline")
        degree = scaling_degree(self.child)
        if degree == -sp.oo:
            return
        effective = rational_part(degree) - self.moment
        if effective >= self.ambient:
            from apps.backend.algebra.errors import DivergentDirect  # noqa: WPS433

            message = (
                f"Overline 子节点 scaling degree {degree} 减去矩阶 {self.moment} "
                f"后不低于环境维数 {self.ambient}。"
            )
            raise DivergentDirect(message)

    def children(self) -> Tuple[Expr, ...]:
        return (self.child,)


@dataclass(frozen=True)
class MomentDiv(Expr):
    """全缩并矩散度 ∂_{r1}…∂_{rl}(z_{r1}…z_{rl}·child)。"""

    kind: ClassVar[str] = "moment_div"
    order: int = 1
    child: Expr = field(default_factory=Sum)
    ambient: int = 4

    def __post_init__(self) -> None:
        """阶数必须为正，Overline 子节点的矩阶与环境维数需一致。"""

        if self.order < 1:
            message = f"MomentDiv 阶数 {self.order} 必须至少为 1。"
            raise ValueError(message)
        if isinstance(self.child, Overline):
            if self.child.moment != self.order or self.child.ambient != self.ambient:
                message = (
                    f"MomentDiv(order={self.order}, ambient={self.ambient}) 的 Overline 子节点"
                    f"矩阶/维数为 ({self.child.moment}, {self.child.ambient})，不匹配。"
                )
                raise ValueError(message)
        _reject_origin_counterterms(node=self.child, ambient=self.ambient, owner="MomentDiv")

    def children(self) -> Tuple[Expr, ...]:
        return (self.child,)


@dataclass(frozen=True)
class BoxOp(Expr):
    """形式 d'Alembert/Laplace 算子，仅在配对或离开原点约化时求值。"""

    kind: ClassVar[str] = "box"
    group: str = "x"
    child: Expr = field(default_factory=Sum)
    metric: MetricConvention = field(default_factory=MetricConvention)

    def children(self) -> Tuple[Expr, ...]:
        return (self.child,)


@dataclass(frozen=True)
class DeltaOperator:
    """作用在 δ 上的常系数微分算子。

    invariants 为二次不变量的多重集：("box", g) 表示 □_g，
    ("dot", g, h) 表示 ∂_g·∂_h；multi_index 非空时表示坐标导数 ∂^β。
    """

    invariants: Tuple[Tuple[str, ...], ...] = ()
    multi_index: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        """两种表示互斥。"""

        if self.multi_index is not None and self.invariants:
            raise ValueError("DeltaOperator 不能同时包含不变量与坐标多重指标。")
        for item in self.invariants:
            if item[0] not in {"box", "dot"}:
                message = f"未知的不变量算子 {item}。"
                raise ValueError(message)

    @property
    def order(self) -> int:
        """微分阶 |β|。"""

        if self.multi_index is not None:
            return sum(self.multi_index)
        return 2 * len(self.invariants)

    def compose(self, invariant: Tuple[str, ...]) -> "DeltaOperator":
        """追加一个二次不变量。"""

        if self.multi_index is not None:
            from apps.backend.algebra.errors import UnsupportedDerivative  # noqa: WPS433

            raise UnsupportedDerivative("坐标多重指标算子不支持与 □ 复合。")
        return DeltaOperator(invariants=tuple(sorted(self.invariants + (invariant,))))

    def label(self) -> str:
        """可读标签，如 □x、∂x·∂y、1。"""

        if self.multi_index is not None:
            return "∂^(" + ",".join(str(item) for item in self.multi_index) + ")"
        if not self.invariants:
            return "1"
        parts = []
        for item in self.invariants:
            if item[0] == "box":
                parts.append(f"□{item[1]}")
            else:
                parts.append(f"∂{item[1]}·∂{item[2]}")
        return " ".join(parts)


@dataclass(frozen=True)
class DeltaCT(Expr):
    """δ 反项 coeff·m^l·log^p(m/M)·P(∂)δ，支撑在 support 组的原点。"""

    kind: ClassVar[str] = "delta"
    operator: DeltaOperator = field(default_factory=DeltaOperator)
    support: Tuple[str, ...] = ("x",)
    dimension: int = 4
    coeff: sp.Expr = ONE
    mass_power: sp.Expr = ZERO
    log_m_power: int = 0

    def __post_init__(self) -> None:
        """支撑组非空且维数为正。"""

        if not self.support:
            raise ValueError("DeltaCT 支撑变量组不能为空。")
        if self.dimension < 1:
            message = f"DeltaCT 维数 {self.dimension} 必须为正。"
            raise ValueError(message)
        if tuple(sorted(self.support)) != self.support:
            message = f"DeltaCT 支撑组 {self.support} 需按字典序排列。"
            raise ValueError(message)


@dataclass(frozen=True)
class Remainder(Expr):
    """不透明余项，只携带元数据 (degree D, order L+1)。"""

    kind: ClassVar[str] = "remainder"
    tag: str = "r"
    degree: sp.Expr = ZERO
    order: int = 1
    groups: Tuple[str, ...] = ()
    extended: bool = False


STRUCTURAL_KINDS = (Overline, MomentDiv, BoxOp, DeltaCT, Remainder)


def _reject_origin_counterterms(node: Expr, ambient: int, owner: str) -> None:
    """支撑在当前环境空间原点的 δ 反项不能出现在延拓节点内部。"""

    for item in node.walk():
        if isinstance(item, DeltaCT) and item.dimension == ambient:
            message = f"{owner}(ambient={ambient}) 内部出现支撑于原点的 DeltaCT {item.operator.label()}。"
            raise ValueError(message)


def _coerce(value: object) -> Expr:
    """把数字或 sympy 表达式提升为常数单项式。"""

    if isinstance(value, Expr):
        return value
    return Mono(mono=Monomial.build(coeff=as_exact(value)))


def scale(e: Expr, coeff: Exact) -> Expr:
    """返回 coeff·e（未规范化）。"""

    return Product(factors=(Mono(mono=Monomial.build(coeff=coeff)), e))


def const(value: Exact) -> Mono:
    """常数单项式。"""

    return Mono(mono=Monomial.build(coeff=value))


def inv(
    group: str,
    power: Exact,
    log_power: int = 0,
    *,
    coeff: Exact = 1,
    mass_power: Exact = 0,
    log_m_power: int = 0,
) -> Mono:
    """单组单项式 coeff·m^l·log^p(m/M)·X_g^power·log(M²X_g)^q。"""

    return Mono(
        mono=Monomial.build(
            coeff=coeff,
            mass_power=mass_power,
            log_m_power=log_m_power,
            factors={group: (power, log_power)},
        ),
    )


def mono(
    *,
    coeff: Exact = 1,
    mass_power: Exact = 0,
    log_m_power: int = 0,
    factors: Optional[Mapping[str, Tuple[Exact, int]]] = None,
) -> Mono:
    """多组单项式的便捷构造。"""

    return Mono(
        mono=Monomial.build(
            coeff=coeff,
            mass_power=mass_power,
            log_m_power=log_m_power,
            factors=factors,
        ),
    )


def delta(
    support: Tuple[str, ...],
    dimension: int,
    *,
    operator: Optional[DeltaOperator] = None,
    coeff: Exact = 1,
    mass_power: Exact = 0,
    log_m_power: int = 0,
) -> DeltaCT:
    """δ 反项构造。"""

    return DeltaCT(
        operator=operator or DeltaOperator(),
        support=tuple(sorted(support)),
        dimension=dimension,
        coeff=as_exact(coeff),
        mass_power=sp.expand(as_exact(mass_power)),
        log_m_power=log_m_power,
    )


def zero() -> Sum:
    """零表达式。"""

    return Sum(terms=())


def node_groups(e: Expr) -> frozenset[str]:
    """节点依赖的全部变量组。"""

    if isinstance(e, Mono):
        return e.mono.groups()
    if isinstance(e, BoxOp):
        return frozenset({e.group}) | node_groups(e.child)
    if isinstance(e, DeltaCT):
        return frozenset(e.support)
    if isinstance(e, Remainder):
        return frozenset(e.groups)
    collected: frozenset[str] = frozenset()
    for child in e.children():
        collected = collected | node_groups(child)
    return collected


__all__ = [
    "ZERO",
    "ONE",
    "Exact",
    "as_exact",
    "rational_part",
    "MetricConvention",
    "GroupPower",
    "Monomial",
    "Expr",
    "Sum",
    "Mono",
    "Product",
    "Overline",
    "MomentDiv",
    "BoxOp",
    "DeltaOperator",
    "DeltaCT",
    "Remainder",
    "STRUCTURAL_KINDS",
    "scale",
    "const",
    "inv",
    "mono",
    "delta",
    "zero",
    "node_groups",
]
