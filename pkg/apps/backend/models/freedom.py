"""重整化自由度：sd 公理允许的反项与 sm 公理下的限制。"""

from __future__ import annotations

import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp

from apps.backend.contracts.reports import CountertermReport
from apps.backend.extension.result import CountertermPattern, counterterm_basis
from apps.backend.extension.tables import SmExtension

LOGGER = logging.getLogger(__name__)

LOG_RATIO = sp.Symbol("log(m/M)")


def _mass_text(mass_power: int) -> str:
    if mass_power == 0:
        return ""
    if mass_power == 1:
        return "m·"
    return f"m^{mass_power}·"


def _group_patterns(patterns: Sequence[CountertermPattern]) -> "OrderedDict[Tuple[int, str], List[CountertermPattern]]":
    """按 (m 幂, 算子) 分组，同组只差 log(m/M) 幂。"""

    grouped: "OrderedDict[Tuple[int, str], List[CountertermPattern]]" = OrderedDict()
    for item in patterns:
        grouped.setdefault((item.mass_power, item.label()), []).append(item)
    return grouped


def renorm_freedom_scan(
    degree: int,
    ambient: int,
    *,
    groups: Sequence[str] = ("x",),
    max_log_power: int = 1,
    prefix: str = "C",
) -> CountertermReport:
    """sd 公理：Σ_i f_i(m/M)·m^l·P_i(∂)δ，f_i 任意；sm 公理：f_i 是 log(m/M) 的多项式。

    l = 0 的 f_i 只能是常数，l > 0 时 log 幂不超过 max_log_power。
    """

    patterns = counterterm_basis(
        degree,
        ambient,
        groups=groups,
        max_log_power=max_log_power,
        prefix=prefix,
    )
    sd_freedom: List[str] = []
    restriction: Dict[str, str] = {}
    for index, ((mass_power, label), items) in enumerate(_group_patterns(patterns).items(), start=1):
        name = f"f{index}"
        operator = "δ" if label == "1" else f"({label})δ"
        sd_freedom.append(f"{name}(m/M)·{_mass_text(mass_power)}{operator}")
        polynomial = sum(
            (sp.Symbol(item.constant) * LOG_RATIO**item.log_m_power for item in items),
            sp.Integer(0),
        )
        restriction[name] = sp.sstr(polynomial)
    report = CountertermReport(
        degree=degree,
        ambient=ambient,
        sd_freedom=sd_freedom,
        sm_restriction=restriction,
        basis=[item.as_item() for item in patterns],
    )
    LOGGER.info(
        "Renormalization freedom scanned",
        extra={"degree": degree, "ambient": ambient, "functions": len(sd_freedom), "constants": len(patterns)},
    )
    return report


def extension_freedom(
    extension: SmExtension,
    *,
    groups: Optional[Sequence[str]] = None,
    max_log_power: int = 1,
    prefix: str = "C",
) -> CountertermReport:
    """延拓结果所在 (D, k) 的自由度扫描。"""

    degree = int(extension.table.degree)
    support = tuple(groups) if groups is not None else extension.table.groups
    return renorm_freedom_scan(
        degree,
        extension.table.ambient,
        groups=support,
        max_log_power=max_log_power,
        prefix=prefix,
    )


def basis_matches(extension: SmExtension, report: CountertermReport) -> bool:
    """逐行延拓产生的反项与枚举的反项基一致（常数名、m 幂、log 幂、算子）。"""

    produced = sorted(
        (item.constant, item.mass_power, item.log_m_power, item.label()) for item in extension.counterterm_basis()
    )
    expected = sorted((item.constant, item.mass_power, item.log_m_power, item.operator) for item in report.basis)
    return produced == expected


__all__ = ["LOG_RATIO", "renorm_freedom_scan", "extension_freedom", "basis_matches"]
