"""场单项式：子单项式枚举、完全配对计数与质量量纲。"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian
from math import comb, factorial
from typing import Dict, List, Mapping, Tuple

import sympy as sp


@dataclass(frozen=True, order=True)
class FieldFactor:
    """带导数的场 ∂^β φ。"""

    name: str = "phi"
    derivative: Tuple[int, ...] = ()

    @property
    def order(self) -> int:
        """导数阶 |β|。"""

        return sum(self.derivative)

    def label(self) -> str:
        """可读标签。"""

        if not self.order:
            return self.name
        return f"∂^{self.derivative}{self.name}"


@dataclass(frozen=True)
class FieldMonomial:
    """场因子的多重集，counts 按因子排序。"""

    counts: Tuple[Tuple[FieldFactor, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[FieldFactor, int]) -> "FieldMonomial":
        """由 {因子: 重数} 构造，丢弃零重数。"""

        items = []
        for item, count in sorted(mapping.items()):
            if count < 0:
                message = f"场因子 {item.label()} 的重数 {count} 不能为负。"
                raise ValueError(message)
            if count:
                items.append((item, int(count)))
        return cls(counts=tuple(items))

    @classmethod
    def power(cls, exponent: int, name: str = "phi") -> "FieldMonomial":
        """φ^n。"""

        return cls.of({FieldFactor(name=name): exponent})

    def degree(self) -> int:
        """场的总个数。"""

        return sum(count for _, count in self.counts)

    def as_dict(self) -> Dict[FieldFactor, int]:
        return dict(self.counts)

    def label(self) -> str:
        """可读标签，空单项式为 1。"""

        if not self.counts:
            return "1"
        parts = []
        for item, count in self.counts:
            parts.append(item.label() if count == 1 else f"{item.label()}^{count}")
        return "·".join(parts)


def submonomials(monomial: FieldMonomial) -> List[Tuple[FieldMonomial, FieldMonomial, int]]:
    """枚举全部 (A̲, Ā, C)，C 为选取 A̲ 的组合数。

    结果按 A̲ 的场个数从大到小排列，同阶时按因子字典序。
    """

    factors = [item for item, _ in monomial.counts]
    ranges = [range(count, -1, -1) for _, count in monomial.counts]
    result = []
    for chosen in cartesian(*ranges):
        lower = FieldMonomial.of(dict(zip(factors, chosen)))
        rest = FieldMonomial.of({item: count - pick for (item, count), pick in zip(monomial.counts, chosen)})
        multiplicity = 1
        for (_, count), pick in zip(monomial.counts, chosen):
            multiplicity *= comb(count, pick)
        result.append((lower, rest, multiplicity))
    result.sort(key=lambda item: -item[0].degree())
    return result


def count_pairings(left: FieldMonomial, right: FieldMonomial) -> int:
    """两顶点之间完全配对（全部缩并）的个数。"""

    left_counts = _names(left)
    right_counts = _names(right)
    if left_counts != right_counts:
        return 0
    total = 1
    for count in left_counts.values():
        total *= factorial(count)
    return total


def _names(monomial: FieldMonomial) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for item, count in monomial.counts:
        if item.order:
            raise ValueError("带导数的场不参与真空期望值的配对计数。")
        counts[item.name] = counts.get(item.name, 0) + count
    return counts


def field_mass_dimension(monomial: FieldMonomial, dimension: int = 4) -> sp.Rational:
    """Σ n·((d-2)/2 + |β|)。"""

    canonical = sp.Rational(dimension - 2, 2)
    total = sp.Integer(0)
    for item, count in monomial.counts:
        total += count * (canonical + item.order)
    return total


__all__ = [
    "FieldFactor",
    "FieldMonomial",
    "submonomials",
    "count_pairings",
    "field_mass_dimension",
]
