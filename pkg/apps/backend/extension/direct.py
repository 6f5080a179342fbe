"""直接延拓：sd < k 时唯一且保持 scaling degree 的延拓。"""

from __future__ import annotations

import logging
from typing import Optional

import sympy as sp

from apps.backend.algebra.errors import DivergentDirect, SmxError
from apps.backend.algebra.expr import Expr, Overline, Remainder, rational_part
from apps.backend.algebra.normal import normalize
from apps.backend.algebra.scaling import DEFAULT_N_MAX, HomogeneityReport, homogeneity_analyze, scaling_degree
from apps.backend.extension.result import ExtensionResult

LOGGER = logging.getLogger(__name__)


def try_homogeneity(e: Expr, n_max: int = DEFAULT_N_MAX) -> Optional[HomogeneityReport]:
    """齐次数据；不满足几乎齐次时返回 None。"""

    try:
        return homogeneity_analyze(e, n_max=n_max)
    except SmxError:
        return None


def direct_extend(e: Expr, ambient: int, n_max: int = DEFAULT_N_MAX) -> ExtensionResult:
    """把 e 包进 Overline，反项基为空。

    Raises
    ------
    DivergentDirect
        sd(e) ≥ k。
    """

    normalized = normalize(e)
    degree = scaling_degree(normalized, ambient)
    if degree != -sp.oo and rational_part(degree) >= ambient:
        message = f"scaling degree {degree} 不低于环境维数 {ambient}，无法直接延拓。"
        raise DivergentDirect(message)
    extended = normalize(Overline(child=normalized, ambient=ambient))
    LOGGER.debug("Direct extension built", extra={"degree": sp.sstr(degree), "ambient": ambient})
    return ExtensionResult(
        extended=extended,
        method="direct",
        ambient=ambient,
        homogeneity=try_homogeneity(normalized, n_max) if normalized.terms else None,
    )


def direct_extend_remainder(remainder: Remainder, ambient: int) -> Remainder:
    """余项的直接延拓，只检查元数据 D - (L+1) < k。"""

    bound = rational_part(remainder.degree) - remainder.order
    if bound >= ambient:
        message = f"余项 scaling degree 上界 {bound} 不低于 {ambient}，需要更高的截断阶。"
        raise DivergentDirect(message)
    return Remainder(
        tag=remainder.tag,
        degree=remainder.degree,
        order=remainder.order,
        groups=remainder.groups,
        extended=True,
    )


__all__ = ["try_homogeneity", "direct_extend", "direct_extend_remainder"]
