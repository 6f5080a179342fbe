"""正则化 sm 展开：按 (p, c, h) 分箱的传播子乘积、投影与性质检查。"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp

from apps.backend.algebra.calculus import apply_box, shifted_euler
from apps.backend.algebra.errors import DegenerateRegulators, SmxError
from apps.backend.algebra.expr import Expr, Mono, Monomial, Product, Sum, as_exact, rational_part
from apps.backend.algebra.normal import atoms, normalize
from apps.backend.algebra.scaling import homogeneity_analyze
from apps.backend.algebra.serialize import expr_document
from apps.backend.contracts.documents import RegSmDocument
from apps.backend.contracts.reports import PropertyCheck, RegCheckReport
from apps.backend.dimreg.lines import LineIndexing, Pair, reg_terms

LOGGER = logging.getLogger(__name__)

BinKey = Tuple[int, Tuple[int, ...], Tuple[int, ...]]


@dataclass(frozen=True)
class RegFactor:
    """乘积中的一个因子：连接 pair 两顶点的正则化传播子，外加 boxes 次 □。"""

    pair: Pair
    boxes: int = 0


@dataclass(frozen=True)
class RegSmExpansion:
    """正则化 sm 展开 Σ_{c,h} Σ_p (m/M)^(2p-2cζ)·u_{p,c,h}。"""

    degree: sp.Expr
    lines: int
    indexing: LineIndexing
    order: int
    bins: Dict[BinKey, Sum] = field(default_factory=dict)
    dimension: int = 4

    def bin(self, p: int, c: Sequence[int], h: Sequence[int]) -> Sum:
        return self.bins.get((p, tuple(c), tuple(h)), Sum())

    def bin_degree(self, key: BinKey) -> sp.Expr:
        """(C) 中的 κ = D - 2p - 2h·ζ。"""

        p, _, h = key
        return sp.expand(self.degree - 2 * p - 2 * self.indexing.dot(h))

    def bracket_degree(self, c: Sequence[int], h: Sequence[int]) -> sp.Expr:
        """方括号的联合标度次数 D - 2(h+c)·ζ。"""

        total = [a + b for a, b in zip(c, h)]
        return sp.expand(self.degree - 2 * self.indexing.dot(total))

    def mass_factor(self, key: BinKey) -> Monomial:
        p, c, _ = key
        return Monomial.build(mass_power=2 * p - 2 * self.indexing.dot(c))

    def bracket(self, c: Sequence[int], h: Sequence[int]) -> Sum:
        """Σ_p (m/M)^(2p-2cζ)·u_{p,c,h}。"""

        pieces: List[Expr] = []
        for key, value in self.bins.items():
            if key[1] == tuple(c) and key[2] == tuple(h):
                pieces.append(Product(factors=(Mono(mono=self.mass_factor(key)), value)))
        return normalize(Sum(terms=tuple(pieces)))

    def as_expr(self) -> Sum:
        pieces = [Product(factors=(Mono(mono=self.mass_factor(key)), value)) for key, value in self.bins.items()]
        return normalize(Sum(terms=tuple(pieces)))

    def line_names(self) -> List[str]:
        return [self.indexing.group(pair) for pair in self.indexing.pairs()]

    def to_document(self) -> RegSmDocument:
        return RegSmDocument(
            D=sp.sstr(self.degree),
            lines=self.lines,
            line_names=self.line_names(),
            bins={bin_label(key): expr_document(value) for key, value in sorted(self.bins.items())},
        )


def bin_label(key: BinKey) -> str:
    """"p:c-向量:h-向量"，例如 "1:0,1,0:2,0,0"。"""

    p, c, h = key
    return f"{p}:{','.join(str(item) for item in c)}:{','.join(str(item) for item in h)}"


def _factor_terms(factor: RegFactor, indexing: LineIndexing, dimension: int, order: int) -> List[Tuple[str, int, Sum]]:
    group = indexing.group(factor.pair)
    result = []
    for kind, l, item in reg_terms(dimension, indexing.zeta(factor.pair), order, group):
        current: Sum = normalize(Mono(mono=item))
        for _ in range(factor.boxes):
            current = apply_box(group, current)
        if current.terms:
            result.append((kind, 2 * l if kind == "h" else dimension - 2 + 2 * l, current))
    return result


def reg_product_sm(
    factors: Sequence[RegFactor],
    indexing: LineIndexing,
    *,
    dimension: int = 4,
    order: int = 2,
) -> RegSmExpansion:
    """展开 ∏_k □^{b_k} Δ^{F,ζ_k}_m 并按 (p, c, h) 分箱。

    D = Q(d-2) + Σ|β_k|，线数 l = Q；p 超过 order 的组合被截掉。
    """

    if not factors:
        raise ValueError("乘积至少需要一个因子。")
    per_factor = [_factor_terms(factor, indexing, dimension, order) for factor in factors]
    collected: Dict[BinKey, List[Expr]] = defaultdict(list)
    for choice in cartesian(*per_factor):
        mass = sum(weight for _, weight, _ in choice)
        if mass % 2:
            continue
        p = mass // 2
        if p > order:
            continue
        c_counts: Dict[Pair, int] = defaultdict(int)
        h_counts: Dict[Pair, int] = defaultdict(int)
        for factor, (kind, _, _) in zip(factors, choice):
            (c_counts if kind == "c" else h_counts)[factor.pair] += 1
        key = (p, indexing.vector(c_counts), indexing.vector(h_counts))
        collected[key].append(Product(factors=tuple(item for _, _, item in choice)))
    bins: Dict[BinKey, Sum] = {}
    for key, pieces in sorted(collected.items()):
        value = _strip_mass(normalize(Sum(terms=tuple(pieces))))
        if value.terms:
            bins[key] = value
    degree = len(factors) * (dimension - 2) + sum(2 * factor.boxes for factor in factors)
    result = RegSmExpansion(
        degree=sp.Integer(degree),
        lines=len(factors),
        indexing=indexing,
        order=order,
        bins=bins,
        dimension=dimension,
    )
    LOGGER.info("Regularized product expanded", extra={"lines": len(factors), "bins": len(bins), "degree": degree})
    return result


def _strip_mass(e: Sum) -> Sum:
    """去掉 (m/M)^(2p-2cζ) 因子，保留与 m 无关的 u。"""

    pieces: List[Expr] = []
    for term in atoms(e):
        scalar = term.scalar
        stripped = Monomial.build(
            coeff=scalar.coeff,
            log_m_power=scalar.log_m_power,
            factors=scalar.factor_map(),
        )
        pieces.append(Product(factors=(Mono(mono=stripped),) + term.structures))
    return normalize(Sum(terms=tuple(pieces)))


def reg_derivative(r: RegSmExpansion, pair: Pair) -> RegSmExpansion:
    """在线位 pair 的变量组上施加 □，次数 D + 2。"""

    group = r.indexing.group(pair)
    bins = {}
    for key, value in r.bins.items():
        boxed = apply_box(group, value)
        if boxed.terms:
            bins[key] = boxed
    return RegSmExpansion(
        degree=sp.expand(r.degree + 2),
        lines=r.lines,
        indexing=r.indexing,
        order=r.order,
        bins=bins,
        dimension=r.dimension,
    )


def reg_project_coeff(
    mixture: Expr,
    target: Sequence[int],
    candidates: Sequence[Sequence[int]],
    degree: sp.Expr,
    p: int,
    zetas: Sequence[sp.Symbol],
) -> Sum:
    """由 U = Σ_h u_{p,c,h} 投影出 u_{p,c,h₀}。

    作用 ∏_{h≠h₀}(D - 2p - 2h·ζ + E) / ∏_{h≠h₀} 2(h₀ - h)·ζ。

    Raises
    ------
    DegenerateRegulators
        某两个候选的 h·ζ 恒等。
    """

    def dot(vector: Sequence[int]) -> sp.Expr:
        if len(vector) != len(zetas):
            message = f"向量 {tuple(vector)} 的长度与正则参数个数 {len(zetas)} 不一致。"
            raise ValueError(message)
        return sp.expand(sum((count * zeta for count, zeta in zip(vector, zetas)), sp.Integer(0)))

    target_key = tuple(target)
    others = []
    seen = {}
    for candidate in [target_key] + [tuple(item) for item in candidates]:
        value = dot(candidate)
        label = sp.sstr(value)
        if label in seen and seen[label] != candidate:
            message = f"h={seen[label]} 与 h={candidate} 的 h·ζ 恒等，无法投影。"
            raise DegenerateRegulators(message)
        seen[label] = candidate
        if candidate != target_key and candidate not in others:
            others.append(candidate)
    current = normalize(mixture)
    denominator = sp.Integer(1)
    base = as_exact(degree) - 2 * p
    for candidate in others:
        current = shifted_euler(current, base - 2 * dot(candidate))
        denominator *= 2 * (dot(target_key) - dot(candidate))
    LOGGER.debug("Bin projected", extra={"candidates": len(others), "p": p})
    return normalize(Product(factors=(Mono(mono=Monomial.build(coeff=1 / denominator)), current)))


def _check(name: str, passed: bool, detail: str = "") -> PropertyCheck:
    return PropertyCheck(name=name, passed=bool(passed), detail="" if passed else detail)


def _is_smooth(value: Sum) -> bool:
    for term in atoms(value):
        if term.structures:
            return False
        if not all(part.is_smooth() for part in term.scalar.factors):
            return False
    return True


def reg_remainder_bound(r: RegSmExpansion, h: Sequence[int]) -> sp.Expr:
    """(6′) 余项 sd 上界 D - 2(P+1) - 2h·ζ（取实部时丢掉 ζ 项）。"""

    return sp.expand(r.degree - 2 * (r.order + 1) - 2 * r.indexing.dot(h))


def reg_check(r: RegSmExpansion, extra_checks: Sequence[PropertyCheck] = ()) -> RegCheckReport:
    """检查 (A)、(B)、(C)、方括号联合齐次性 (D) 与 (6′)。

    extra_checks 用于附加数值检查（例如 m↓0 极限，名称为 1′）。
    """

    checks: List[PropertyCheck] = []
    violating = [bin_label(key) for key in r.bins if key[0] == 0 and any(key[1])]
    checks.append(_check("A", not violating, f"p=0 且 c≠0 的分箱非空：{violating}。"))
    rough = [bin_label(key) for key, value in r.bins.items() if not any(key[2]) and not _is_smooth(value)]
    checks.append(_check("B", not rough, f"h=0 的分箱不光滑：{rough}。"))
    for key, value in sorted(r.bins.items()):
        kappa = r.bin_degree(key)
        residual = shifted_euler(value, kappa)
        checks.append(_check(f"C[{bin_label(key)}]", not residual.terms, f"(E + {kappa}) u ≠ 0。"))
    brackets = sorted({(key[1], key[2]) for key in r.bins})
    for c, h in brackets:
        name = f"D[{','.join(map(str, c))}:{','.join(map(str, h))}]"
        expected = r.bracket_degree(c, h)
        try:
            report = homogeneity_analyze(r.bracket(c, h), with_mass=True, n_max=1)
            passed = sp.expand(report.degree - expected) == 0
            detail = f"联合次数 {report.degree} ≠ {expected}。"
        except SmxError as error:
            passed, detail = False, str(error)
        checks.append(_check(name, passed, detail))
    bounds_ok = True
    for key in r.bins:
        bound = rational_part(reg_remainder_bound(r, key[2]))
        if rational_part(r.bin_degree(key)) <= bound:
            bounds_ok = False
    checks.append(_check("6'", bounds_ok, "存在分箱的次数不高于余项的 sd 上界。"))
    checks.extend(extra_checks)
    report = RegCheckReport(
        degree=sp.sstr(r.degree),
        lines=r.lines,
        passed=all(item.passed for item in checks),
        checks=checks,
        numeric_limit_checked=any(item.name == "1'" for item in extra_checks),
    )
    LOGGER.debug("Regularized check finished", extra={"passed": report.passed, "failures": report.failures()})
    return report


__all__ = [
    "BinKey",
    "RegFactor",
    "RegSmExpansion",
    "bin_label",
    "reg_product_sm",
    "reg_derivative",
    "reg_project_coeff",
    "reg_remainder_bound",
    "reg_check",
]
