"""Euler 矩方法：解析正则化下的唯一延拓。

B := k + E 满足 ∂_r(z_r·) = B。若 (B + c + η)^N v = 0，只要找到
Σ_l c_l(η)·∏_{j<l}(B+j) ≡ 1 (mod (B+c+η)^N)，就有
v = Σ_l c_l·MomentDiv(l, Overline(z^l v))，右侧每个 Overline 都可直接延拓。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import sympy as sp

from apps.backend.algebra.errors import ResonantDegree, UnsupportedForm
from apps.backend.algebra.expr import (
    Exact,
    Expr,
    MomentDiv,
    Overline,
    Product,
    Sum,
    as_exact,
    const,
    mono,
    rational_part,
)
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX, homogeneity_analyze, scaling_degree
from apps.backend.extension.direct import direct_extend
from apps.backend.extension.result import ExtensionResult

LOGGER = logging.getLogger(__name__)

ETA = sp.Symbol("eta")
ZETA = sp.Symbol("zeta")
_B = sp.Symbol("B")


@dataclass(frozen=True)
class MomentSolution:
    """矩方程组的解 {l: c_l(η)}。"""

    order: int
    lowest: int
    shift: sp.Expr
    eta: sp.Expr
    coefficients: Dict[int, sp.Expr]

    def annihilator(self) -> sp.Poly:
        """(B + c + η)^N。"""

        return sp.Poly((_B + self.shift + self.eta) ** self.order, _B)

    def certificate(self) -> sp.Expr:
        """Σ c_l ∏(B+j) - 1 对零化多项式的余式，应恒为 0。"""

        total = sum(
            (coeff * sp.Mul(*[_B + j for j in range(l)]) for l, coeff in self.coefficients.items()),
            sp.Integer(0),
        )
        numerator, denominator = sp.fraction(sp.together(total - 1))
        remainder = sp.Poly(sp.expand(numerator), _B).rem(self.annihilator())
        return sp.simplify(remainder.as_expr() / denominator)


def moment_solver(
    order: int,
    lowest: int,
    shift: Exact = 0,
    eta: Exact = ETA,
    ambient: Optional[int] = None,
) -> MomentSolution:
    """求解 Σ_{l=l_min}^{l_min+N-1} c_l ∏_{j<l}(B+j) ≡ 1 (mod (B+c+η)^N)。

    Parameters
    ----------
    order: int
        零化阶 N。
    lowest: int
        最低矩阶 l_min。
    shift: Exact
        平移 c = D₀ - k。
    eta: Exact
        正则参数 η，通常是符号；特化为数值时可能共振。
    ambient: Optional[int]
        仅用于日志。

    Raises
    ------
    ResonantDegree
        方程组奇异。
    """

    if order < 1 or lowest < 0:
        message = f"N={order} 至少为 1，l_min={lowest} 不能为负。"
        raise ValueError(message)
    shift_value = as_exact(shift)
    eta_value = as_exact(eta)
    modulus = sp.Poly((_B + shift_value + eta_value) ** order, _B)
    moments = list(range(lowest, lowest + order))
    columns: List[List[sp.Expr]] = []
    for l in moments:
        product = sp.Poly(sp.Mul(*[_B + j for j in range(l)]), _B)
        remainder = product.rem(modulus)
        columns.append([remainder.coeff_monomial(_B**power) for power in range(order)])
    matrix = sp.Matrix(order, order, lambda row, column: columns[column][row])
    determinant = sp.factor(matrix.det())
    if determinant == 0:
        message = f"η={eta_value} 使矩方程组奇异（N={order}, l_min={lowest}, c={shift_value}）。"
        raise ResonantDegree(message)
    rhs = sp.Matrix([1] + [0] * (order - 1))
    values = matrix.LUsolve(rhs)
    coefficients = {l: sp.factor(sp.cancel(values[index])) for index, l in enumerate(moments)}
    LOGGER.debug(
        "Moment system solved",
        extra={"order": order, "lowest": lowest, "shift": sp.sstr(shift_value), "ambient": ambient},
    )
    return MomentSolution(order=order, lowest=lowest, shift=shift_value, eta=eta_value, coefficients=coefficients)


def regulator_groups(e: Expr) -> List[str]:
    """单项式部分出现的变量组，即默认乘上 (M²X_g)^ζ 的组。"""

    groups = set()
    for term in atoms(e):
        groups |= term.scalar.groups()
    return sorted(groups)


def regularize(e: Expr, zeta: sp.Symbol, groups: Sequence[str]) -> Sum:
    """e·∏_g (M²X_g)^ζ。"""

    factor = mono(factors={group: (zeta, 0) for group in groups})
    return normalize(Product(factors=(e, factor)))


def regularized_extend(
    v0: Expr,
    zeta: sp.Symbol = ZETA,
    ambient: int = 8,
    *,
    groups: Optional[Sequence[str]] = None,
    n_max: int = DEFAULT_N_MAX,
    verify: bool = True,
) -> ExtensionResult:
    """解析正则化后用矩方法构造唯一延拓。

    η = -2·#groups·ζ；次数为 D₀ + η，c = D₀ - k，l_min = max(1, ⌊D₀ - k⌋ + 1)。
    已可直接延拓的输入绕过矩方法。

    Raises
    ------
    UnsupportedForm
        正则化后次数不是 D₀ + η，或离开原点的恒等式不成立。
    """

    source = normalize(v0)
    base_degree = scaling_degree(source, ambient)
    if base_degree == -sp.oo or rational_part(base_degree) < ambient:
        return direct_extend(source, ambient, n_max=n_max)
    chosen = list(groups) if groups is not None else regulator_groups(source)
    if not chosen:
        raise UnsupportedForm("没有可以正则化的变量组。")
    eta = -2 * len(chosen) * zeta
    regularized = regularize(source, zeta, chosen)
    report = homogeneity_analyze(regularized, n_max=n_max)
    rational = rational_part(report.degree)
    if sp.expand(report.degree - rational - eta) != 0:
        message = f"正则化后的次数 {report.degree} 不是 {rational} + η（η = {eta}）。"
        raise UnsupportedForm(message)
    shift = rational - ambient
    lowest = max(1, int(sp.floor(shift)) + 1)
    solution = moment_solver(report.annihilator_order, lowest, shift, ETA, ambient=ambient)
    coefficients = {l: sp.factor(coeff.subs(ETA, eta)) for l, coeff in solution.coefficients.items()}
    pieces: List[Expr] = []
    for l, coeff in coefficients.items():
        node = MomentDiv(order=l, child=Overline(child=regularized, ambient=ambient, moment=l), ambient=ambient)
        pieces.append(Product(factors=(const(coeff), node)))
    extended = normalize(Sum(terms=tuple(pieces)))
    result = ExtensionResult(
        extended=extended,
        method="moment",
        ambient=ambient,
        homogeneity=report,
        moment_coefficients=dict(solution.coefficients),
        regulator=zeta,
        eta=eta,
    )
    if verify and not result.restricts_to(regularized):
        raise UnsupportedForm("矩延拓在原点之外没有重现正则化输入。")
    LOGGER.info(
        "Regularized extension built",
        extra={"degree": sp.sstr(report.degree), "annihilator_order": report.annihilator_order, "lowest": lowest},
    )
    return result


__all__ = [
    "ETA",
    "ZETA",
    "MomentSolution",
    "moment_solver",
    "regulator_groups",
    "regularize",
    "regularized_extend",
]
