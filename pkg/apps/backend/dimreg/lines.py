"""正则化传播子与逐线正则参数的记账。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Mapping, Sequence, Tuple

import sympy as sp

from apps.backend.algebra.errors import OddDimension
from apps.backend.algebra.expr import Mono, Monomial, Sum

LOGGER = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class LineIndexing:
    """n 个顶点的 N = n(n-1)/2 个线位，每个线位有自己的 ζ_ij 与变量组。"""

    vertices: int

    def __post_init__(self) -> None:
        if self.vertices < 2:
            message = f"顶点数 {self.vertices} 至少为 2。"
            raise ValueError(message)

    @property
    def size(self) -> int:
        return self.vertices * (self.vertices - 1) // 2

    def pairs(self) -> List[Pair]:
        """按字典序排列的 (i, j)，1 ≤ i < j ≤ n。"""

        return list(combinations(range(1, self.vertices + 1), 2))

    def index(self, pair: Pair) -> int:
        i, j = sorted(pair)
        try:
            return self.pairs().index((i, j))
        except ValueError as error:
            message = f"线位 {pair} 不在 {self.vertices} 个顶点的范围内。"
            raise KeyError(message) from error

    def group(self, pair: Pair) -> str:
        """线位对应的变量组名，例如 x12。"""

        i, j = sorted(pair)
        self.index((i, j))
        return f"x{i}{j}"

    def zeta(self, pair: Pair) -> sp.Symbol:
        i, j = sorted(pair)
        self.index((i, j))
        return sp.Symbol(f"zeta{i}{j}")

    def zetas(self) -> Tuple[sp.Symbol, ...]:
        return tuple(self.zeta(pair) for pair in self.pairs())

    def vector(self, counts: Mapping[Pair, int]) -> Tuple[int, ...]:
        """{线位: 次数} → 长度 N 的计数向量。"""

        values = [0] * self.size
        for pair, count in counts.items():
            if count < 0:
                message = f"线位 {pair} 的计数 {count} 不能为负。"
                raise ValueError(message)
            values[self.index(pair)] += count
        return tuple(values)

    def dot(self, vector: Sequence[int]) -> sp.Expr:
        """c·ζ = Σ c_ij ζ_ij。"""

        if len(vector) != self.size:
            message = f"向量长度 {len(vector)} 与线位数 {self.size} 不一致。"
            raise ValueError(message)
        return sp.expand(sum((count * zeta for count, zeta in zip(vector, self.zetas())), sp.Integer(0)))


def coefficient_symbols(group: str, order: int) -> Dict[str, List[sp.Symbol]]:
    """符号系数 h_l^ζ 与 c_l^ζ，l = 0..order。"""

    return {
        "h": [sp.Symbol(f"h{l}_{group}") for l in range(order + 1)],
        "c": [sp.Symbol(f"c{l}_{group}") for l in range(order + 1)],
    }


def reg_terms(
    dimension: int,
    zeta: sp.Symbol,
    order: int,
    group: str = "x",
) -> List[Tuple[str, int, Monomial]]:
    """正则化传播子截断到 (m/M)^(2p)，p ≤ order 的各项 (种类, l, 单项式)。

    h 项 h_l·m^(2l)·X^(l+1-d/2+ζ)，c 项 c_l·m^(d-2+2l-2ζ)·X^l；M^(2ζ) 隐含在
    ζ 指数中。

    Raises
    ------
    OddDimension
        d 为奇数。
    """

    if dimension % 2:
        message = f"正则化展开只支持偶数维，收到 d={dimension}。"
        raise OddDimension(message)
    if dimension <= 2:
        message = f"维数 d={dimension} 必须大于 2。"
        raise ValueError(message)
    if order < 0:
        message = f"截断阶 {order} 不能为负。"
        raise ValueError(message)
    symbols = coefficient_symbols(group, order)
    half = dimension // 2
    terms: List[Tuple[str, int, Monomial]] = []
    for l in range(order + 1):
        terms.append(
            (
                "h",
                l,
                Monomial.build(coeff=symbols["h"][l], mass_power=2 * l, factors={group: (l + 1 - half + zeta, 0)}),
            ),
        )
    for l in range(order - (half - 1) + 1):
        terms.append(
            (
                "c",
                l,
                Monomial.build(
                    coeff=symbols["c"][l],
                    mass_power=dimension - 2 + 2 * l - 2 * zeta,
                    factors={group: (l, 0)},
                ),
            ),
        )
    return terms


def reg_propagator(dimension: int = 4, zeta: sp.Symbol = sp.Symbol("zeta"), order: int = 2, group: str = "x") -> Sum:
    """截断的正则化 Feynman 传播子 Δ^{F,ζ}_m。"""

    terms = reg_terms(dimension, zeta, order, group)
    LOGGER.debug("Regularized propagator built", extra={"dimension": dimension, "order": order, "terms": len(terms)})
    return Sum(terms=tuple(Mono(mono=item) for _, _, item in terms))


__all__ = ["Pair", "LineIndexing", "coefficient_symbols", "reg_terms", "reg_propagator"]
