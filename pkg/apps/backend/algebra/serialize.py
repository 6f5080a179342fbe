"""表达式树的 JSON 序列化、sympy 像与文本渲染。

精确有理数写成 "p/q" 字符串；含正则参数的指数写成
{"rat": "p/q", "zeta": {"zeta": n}}；其余符号系数写成 sympy 源码串。
"""

from __future__ import annotations

from typing import Any, Dict, Mapping, Optional

import sympy as sp

from apps.backend.algebra.expr import (
    BoxOp,
    DeltaCT,
    DeltaOperator,
    Expr,
    MetricConvention,
    Mono,
    Monomial,
    MomentDiv,
    Overline,
    Product,
    Remainder,
    Sum,
    as_exact,
    rational_part,
)

MASS = sp.Symbol("m", positive=True)
SCALE = sp.Symbol("M", positive=True)


def exact_to_json(value: sp.Expr) -> str:
    """精确值的字符串形式，有理数为 "p/q"。"""

    value = sp.sympify(value)
    if value.is_Rational:
        if value.q == 1:
            return str(value.p)
        return f"{value.p}/{value.q}"
    return sp.sstr(value)


def exact_from_json(text: Any) -> sp.Expr:
    """exact_to_json 的逆。"""

    if isinstance(text, int):
        return sp.Integer(text)
    if not isinstance(text, str):
        message = f"精确值需为字符串或整数，收到 {type(text).__name__}。"
        raise TypeError(message)
    return as_exact(sp.sympify(text, rational=True))


def exponent_to_json(value: sp.Expr) -> Any:
    """指数：纯有理数时为字符串，含正则参数时为 {rat, zeta}。"""

    value = sp.expand(sp.sympify(value))
    if not value.free_symbols:
        return exact_to_json(value)
    zeta = {}
    for symbol in sorted(value.free_symbols, key=lambda item: item.name):
        coefficient = value.coeff(symbol)
        zeta[symbol.name] = exact_to_json(coefficient)
    return {"rat": exact_to_json(rational_part(value)), "zeta": zeta}


def exponent_from_json(payload: Any, symbols: Optional[Mapping[str, sp.Symbol]] = None) -> sp.Expr:
    """exponent_to_json 的逆；symbols 可指定正则符号对象。"""

    if not isinstance(payload, dict):
        return exact_from_json(payload)
    table = dict(symbols or {})
    total = exact_from_json(payload.get("rat", "0"))
    for name, coefficient in payload.get("zeta", {}).items():
        symbol = table.get(name) or sp.Symbol(name)
        total += exact_from_json(coefficient) * symbol
    return sp.expand(total)


def _monomial_payload(item: Monomial) -> Dict[str, Any]:
    return {
        "coeff": exact_to_json(item.coeff),
        "mass_power": exponent_to_json(item.mass_power),
        "log_m_power": item.log_m_power,
        "factors": [
            {"group": part.group, "power": exponent_to_json(part.power), "log_power": part.log_power}
            for part in item.factors
        ],
    }


def _metric_payload(metric: MetricConvention) -> Dict[str, int]:
    return {"sign": metric.sign, "dimension": metric.dimension, "vertices": metric.vertices}


def to_payload(e: Expr) -> Dict[str, Any]:
    """把表达式树转换为带 kind 标签的 JSON 兼容字典。"""

    if isinstance(e, Mono):
        return {"kind": "mono", **_monomial_payload(e.mono)}
    if isinstance(e, Sum):
        return {"kind": "sum", "terms": [to_payload(item) for item in e.terms]}
    if isinstance(e, Product):
        return {"kind": "product", "factors": [to_payload(item) for item in e.factors]}
    if isinstance(e, Overline):
        return {"kind": "overline", "ambient": e.ambient, "moment": e.moment, "child": to_payload(e.child)}
    if isinstance(e, MomentDiv):
        return {"kind": "moment_div", "order": e.order, "ambient": e.ambient, "child": to_payload(e.child)}
    if isinstance(e, BoxOp):
        return {"kind": "box", "group": e.group, "metric": _metric_payload(e.metric), "child": to_payload(e.child)}
    if isinstance(e, DeltaCT):
        return {
            "kind": "delta",
            "operator": {
                "invariants": [list(item) for item in e.operator.invariants],
                "multi_index": list(e.operator.multi_index) if e.operator.multi_index is not None else None,
            },
            "support": list(e.support),
            "dimension": e.dimension,
            "coeff": exact_to_json(e.coeff),
            "mass_power": exponent_to_json(e.mass_power),
            "log_m_power": e.log_m_power,
        }
    if isinstance(e, Remainder):
        return {
            "kind": "remainder",
            "tag": e.tag,
            "degree": exponent_to_json(e.degree),
            "order": e.order,
            "groups": list(e.groups),
            "extended": e.extended,
        }
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def from_payload(payload: Mapping[str, Any], symbols: Optional[Mapping[str, sp.Symbol]] = None) -> Expr:
    """to_payload 的逆。

    Raises
    ------
    KeyError
        kind 未知或缺少字段。
    """

    kind = payload["kind"]
    if kind == "mono":
        factors = {
            item["group"]: (exponent_from_json(item["power"], symbols), int(item["log_power"]))
            for item in payload.get("factors", [])
        }
        return Mono(
            mono=Monomial.build(
                coeff=exact_from_json(payload.get("coeff", "1")),
                mass_power=exponent_from_json(payload.get("mass_power", "0"), symbols),
                log_m_power=int(payload.get("log_m_power", 0)),
                factors=factors,
            ),
        )
    if kind == "sum":
        return Sum(terms=tuple(from_payload(item, symbols) for item in payload["terms"]))
    if kind == "product":
        return Product(factors=tuple(from_payload(item, symbols) for item in payload["factors"]))
    if kind == "overline":
        return Overline(
            child=from_payload(payload["child"], symbols),
            ambient=int(payload["ambient"]),
            moment=int(payload.get("moment", 0)),
        )
    if kind == "moment_div":
        return MomentDiv(
            order=int(payload["order"]),
            child=from_payload(payload["child"], symbols),
            ambient=int(payload["ambient"]),
        )
    if kind == "box":
        return BoxOp(
            group=payload["group"],
            child=from_payload(payload["child"], symbols),
            metric=MetricConvention(**payload["metric"]),
        )
    if kind == "delta":
        operator = payload.get("operator", {})
        multi_index = operator.get("multi_index")
        return DeltaCT(
            operator=DeltaOperator(
                invariants=tuple(tuple(item) for item in operator.get("invariants", [])),
                multi_index=tuple(multi_index) if multi_index is not None else None,
            ),
            support=tuple(payload["support"]),
            dimension=int(payload["dimension"]),
            coeff=exact_from_json(payload.get("coeff", "1")),
            mass_power=exponent_from_json(payload.get("mass_power", "0"), symbols),
            log_m_power=int(payload.get("log_m_power", 0)),
        )
    if kind == "remainder":
        return Remainder(
            tag=payload["tag"],
            degree=exponent_from_json(payload["degree"], symbols),
            order=int(payload["order"]),
            groups=tuple(payload.get("groups", [])),
            extended=bool(payload.get("extended", False)),
        )
    message = f"未知的节点标签 {kind!r}。"
    raise KeyError(message)


def invariant_symbol(group: str) -> sp.Symbol:
    """变量组 g 的不变量符号 X_g。"""

    return sp.Symbol(f"X_{group}", positive=True)


def log_symbol(group: str) -> sp.Symbol:
    """log(M²X_g) 的缩写符号 L_g。"""

    return sp.Symbol(f"L_{group}")


LOG_MASS = sp.Symbol("log_m")


_OVERLINE = sp.Function("Overline")
_MOMENT = sp.Function("MomentDiv")
_BOX = sp.Function("Box")
_DELTA = sp.Function("delta")
_REMAINDER = sp.Function("r")


def monomial_to_sympy(item: Monomial, *, log_symbols: bool = True) -> sp.Expr:
    """单项式的 sympy 像；log_symbols=False 时展开为 log(M**2*X_g)。"""

    value = item.coeff * MASS ** item.mass_power
    if item.log_m_power:
        log_mass = LOG_MASS if log_symbols else sp.log(MASS / SCALE)
        value *= log_mass ** item.log_m_power
    for part in item.factors:
        symbol = invariant_symbol(part.group)
        value *= symbol ** part.power
        if part.log_power:
            log_value = log_symbol(part.group) if log_symbols else sp.log(SCALE**2 * symbol)
            value *= log_value ** part.log_power
    return value


def to_sympy(e: Expr, *, log_symbols: bool = True) -> sp.Expr:
    """规范 sympy 像：结构节点映射为未定义函数。"""

    if isinstance(e, Mono):
        return monomial_to_sympy(e.mono, log_symbols=log_symbols)
    if isinstance(e, Sum):
        return sp.Add(*[to_sympy(item, log_symbols=log_symbols) for item in e.terms])
    if isinstance(e, Product):
        return sp.Mul(*[to_sympy(item, log_symbols=log_symbols) for item in e.factors])
    if isinstance(e, Overline):
        child = to_sympy(e.child, log_symbols=log_symbols)
        if e.moment:
            return _OVERLINE(child, sp.Integer(e.moment))
        return _OVERLINE(child)
    if isinstance(e, MomentDiv):
        return _MOMENT(sp.Integer(e.order), to_sympy(e.child, log_symbols=log_symbols))
    if isinstance(e, BoxOp):
        return _BOX(sp.Symbol(e.group), to_sympy(e.child, log_symbols=log_symbols))
    if isinstance(e, DeltaCT):
        scalar = monomial_to_sympy(
            Monomial.build(coeff=e.coeff, mass_power=e.mass_power, log_m_power=e.log_m_power),
            log_symbols=log_symbols,
        )
        label = sp.Symbol(e.operator.label().replace(" ", "*"))
        return scalar * _DELTA(label, *[sp.Symbol(item) for item in e.support])
    if isinstance(e, Remainder):
        return _REMAINDER(sp.Symbol(e.tag), sp.Integer(e.order))
    message = f"未知节点类型 {type(e).__name__}。"
    raise TypeError(message)


def render_text(e: Expr) -> str:
    """单行可读文本，基于规范化后的 sympy 像。"""

    from apps.backend.algebra.normal import normalize  # noqa: WPS433

    normalized = normalize(e)
    if not normalized.terms:
        return "0"
    return " + ".join(sp.sstr(to_sympy(item)) for item in normalized.terms).replace("+ -", "- ")


def expr_document(e: Expr):
    """规范化后的 ExprDocument。"""

    from apps.backend.algebra.normal import normalize  # noqa: WPS433
    from apps.backend.contracts.documents import ExprDocument  # noqa: WPS433

    normalized = normalize(e)
    return ExprDocument(tree=to_payload(normalized), text=render_text(normalized))


__all__ = [
    "MASS",
    "SCALE",
    "LOG_MASS",
    "exact_to_json",
    "exact_from_json",
    "exponent_to_json",
    "exponent_from_json",
    "to_payload",
    "from_payload",
    "invariant_symbol",
    "log_symbol",
    "monomial_to_sympy",
    "to_sympy",
    "render_text",
    "expr_document",
]
