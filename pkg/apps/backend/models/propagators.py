"""传播子模型的小 X 展开表。

偶数维 d 中，Δ⁺_m 的 m^(d-2) 起各行带 log(-m²x²) = log(M²X) + 2log(m/M)；
Feynman 与 Wightman 只差 i0 处方，在表层面共享符号常数。Hadamard(μ)
把 log(m/M) 行换成常数 log(μ/M)，因此在 m ≥ 0 上光滑。奇数维没有对数，
质量幂可以是奇数。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import sympy as sp

from apps.backend.algebra.errors import TruncationTooSmall
from apps.backend.algebra.expr import Expr, MetricConvention, Sum, inv
from apps.backend.smx.expansion import RowKey, SmExpansion

LOGGER = logging.getLogger(__name__)

KINDS = ("Wightman", "Feynman", "Hadamard", "HadamardDifference")

LOG_MU = sp.Symbol("log_mu")


@dataclass(frozen=True)
class PropagatorModel:
    """两点函数模型。

    Attributes
    ----------
    kind: str
        Wightman、Feynman、Hadamard 或 HadamardDifference（= Feynman - Hadamard）。
    dimension: int
        时空维数 d > 2。
    truncation: int
        已知的最高质量幂，sm 表只能截断到不超过它的阶。
    sign: int
        度规约定的符号，-1 为闵氏。
    """

    kind: str = "Feynman"
    dimension: int = 4
    truncation: int = 2
    sign: int = -1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            message = f"未知的传播子类型 {self.kind!r}，可选 {KINDS}。"
            raise ValueError(message)
        if self.dimension <= 2:
            message = f"维数 d={self.dimension} 必须大于 2。"
            raise ValueError(message)
        if self.truncation < 0:
            message = f"截断阶 {self.truncation} 不能为负。"
            raise ValueError(message)

    @property
    def metric(self) -> MetricConvention:
        return MetricConvention(sign=self.sign, dimension=self.dimension, vertices=2)

    @property
    def degree(self) -> int:
        """联合标度次数 D = d - 2。"""

        return self.dimension - 2

    @property
    def even(self) -> bool:
        return self.dimension % 2 == 0

    @property
    def log_start(self) -> int:
        """带 log 的第一个质量幂 m^(d-2)；奇数维没有对数行。"""

        return self.dimension - 2 if self.even else self.truncation + 1

    def symbols(self) -> Dict[str, sp.Symbol]:
        """模型用到的全部符号常数，按名称索引。"""

        names = ["a0"]
        step = 2 if self.even else 1
        for l in range(step, self.truncation + 1, step):
            j = l // 2 if self.even else l
            if l >= self.log_start:
                names.extend([f"a{j}", f"A{j}"])
            else:
                names.append(f"b{j}")
        if self.kind in {"Hadamard", "HadamardDifference"} and self.even:
            names.append(LOG_MU.name)
        return {name: sp.Symbol(name) for name in names}

    def with_kind(self, kind: str) -> "PropagatorModel":
        return PropagatorModel(kind=kind, dimension=self.dimension, truncation=self.truncation, sign=self.sign)


def _even_rows(model: PropagatorModel, order: int, group: str) -> Dict[RowKey, List[Expr]]:
    half = model.dimension // 2
    symbols = model.symbols()
    rows: Dict[RowKey, List[Expr]] = {}
    if model.kind != "HadamardDifference":
        rows[(0, 0)] = [inv(group, 1 - half, coeff=symbols["a0"])]
    for l in range(2, order + 1, 2):
        j = l // 2
        power = j + 1 - half
        if l < model.log_start:
            if model.kind != "HadamardDifference":
                rows[(l, 0)] = [inv(group, power, coeff=symbols[f"b{j}"])]
            continue
        a_j, big_a = symbols[f"a{j}"], symbols[f"A{j}"]
        if model.kind in {"Feynman", "Wightman"}:
            rows[(l, 0)] = [inv(group, power, 1, coeff=a_j), inv(group, power, coeff=big_a)]
            rows[(l, 1)] = [inv(group, power, coeff=2 * a_j)]
        elif model.kind == "Hadamard":
            rows[(l, 0)] = [
                inv(group, power, 1, coeff=a_j),
                inv(group, power, coeff=big_a + 2 * a_j * LOG_MU),
            ]
        else:
            rows[(l, 0)] = [inv(group, power, coeff=-2 * a_j * LOG_MU)]
            rows[(l, 1)] = [inv(group, power, coeff=2 * a_j)]
    return rows


def _odd_rows(model: PropagatorModel, order: int, group: str) -> Dict[RowKey, List[Expr]]:
    if model.kind == "HadamardDifference":
        return {}
    symbols = model.symbols()
    rows: Dict[RowKey, List[Expr]] = {(0, 0): [inv(group, sp.Rational(2 - model.dimension, 2), coeff=symbols["a0"])]}
    for l in range(1, order + 1):
        rows[(l, 0)] = [inv(group, sp.Rational(l + 2 - model.dimension, 2), coeff=symbols[f"b{l}"])]
    return rows


def propagator_sm(model: PropagatorModel, order: Optional[int] = None, group: str = "x") -> SmExpansion:
    """模型的 sm 表，截断到 m^order。

    d = 4 Feynman：u₀ = a₀/X，u_{2,0} = a₁log(M²X) + A₁，u_{2,1} = 2a₁，D = 2。

    Raises
    ------
    TruncationTooSmall
        order 超过模型已知的截断阶。
    """

    target = model.truncation if order is None else order
    if target < 0:
        message = f"截断阶 {target} 不能为负。"
        raise ValueError(message)
    if target > model.truncation:
        message = f"请求的截断阶 {target} 超过模型截断阶 {model.truncation}。"
        raise TruncationTooSmall(message)
    rows = _even_rows(model, target, group) if model.even else _odd_rows(model, target, group)
    expansion = SmExpansion.build(
        degree=model.degree,
        order=target,
        table={key: Sum(terms=tuple(items)) for key, items in rows.items()},
        ambient=model.dimension,
        groups=(group,),
        metric=model.metric,
        tag=_tag(model.kind),
    )
    LOGGER.debug(
        "Propagator table built",
        extra={"kind": model.kind, "dimension": model.dimension, "order": target, "rows": len(expansion.rows)},
    )
    return expansion


def _tag(kind: str) -> str:
    return {"Wightman": "R+", "Feynman": "R", "Hadamard": "RH", "HadamardDifference": "Rd"}[kind]


def model_pair(
    model: PropagatorModel,
    order: Optional[int] = None,
    group: str = "x",
) -> Tuple[SmExpansion, SmExpansion]:
    """(Hadamard 部分, 光滑差 d^μ_m)，二者之和是 Feynman 表。"""

    return (
        propagator_sm(model.with_kind("Hadamard"), order, group),
        propagator_sm(model.with_kind("HadamardDifference"), order, group),
    )


__all__ = ["KINDS", "LOG_MU", "PropagatorModel", "propagator_sm", "model_pair"]
