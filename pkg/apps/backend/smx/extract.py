"""由 m↓0 样本提取 sm 展开系数的数值极限协议。

对目标行 l，先减去已提取的低阶行并除以 m^l 得到 g(m)。从 P_start
开始自上而下：g/λ^P（λ = log(m/M)，M = 1）按 t = 1/λ 的多项式拟合，
常数项即 u_{l,P}；额外的 1/t 列检测 P_start 是否偏低。每个系数在
两次网格加密之间稳定到容差以内才视为收敛。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from mpmath import mp

from apps.backend.algebra.errors import DivergentLimit
from apps.backend.contracts.reports import ExtractionReport

LOGGER = logging.getLogger(__name__)

SampleFunction = Callable[[object], object]


@dataclass(frozen=True)
class ExtractionConfig:
    """质量极限协议的参数。"""

    tolerance: float = 1e-3
    smallest_mass: float = 1e-8
    points: int = 12
    refinements: int = 2
    decades: int = 3
    refinement_step: int = 2
    dps: int = 50

    def __post_init__(self) -> None:
        """校验网格参数。"""

        if not 0 < self.smallest_mass < 1:
            raise ValueError("smallest_mass 必须位于 (0, 1)。")
        if self.points < 4:
            raise ValueError("points 至少为 4。")
        if self.refinements < 1:
            raise ValueError("refinements 至少为 1。")

    def grids(self) -> List[List[object]]:
        """由粗到细的几何网格，最后一个网格的下端为 smallest_mass。"""

        result = []
        for level in range(self.refinements + 1):
            lower = mp.mpf(self.smallest_mass) * mp.mpf(10) ** (self.refinement_step * (self.refinements - level))
            upper = lower * mp.mpf(10) ** self.decades
            ratio = (lower / upper) ** (mp.mpf(1) / (self.points - 1))
            result.append([upper * ratio**index for index in range(self.points)])
        return result


def _peel(
    samples: List[Tuple[object, object]],
    p_start: int,
    tolerance: float,
) -> Dict[int, object]:
    """在一个网格上自上而下提取 {p: u_{l,p}}。"""

    current = [value for _, value in samples]
    logs = [lam for lam, _ in samples]
    extracted: Dict[int, object] = {}
    for power in range(p_start, -1, -1):
        matrix = mp.matrix(len(samples), power + 2)
        rhs = mp.matrix(len(samples), 1)
        for index, lam in enumerate(logs):
            t = 1 / lam
            matrix[index, 0] = lam
            for column in range(power + 1):
                matrix[index, column + 1] = t**column
            rhs[index] = current[index] / lam**power
        solution, _ = mp.qr_solve(matrix, rhs)
        divergence, limit = solution[0], solution[1]
        if power == p_start and abs(divergence) > tolerance * max(1, abs(limit)):
            message = (
                f"P_start={p_start} 时 g/log^P(m) 仍随 log(m) 增长（系数 {mp.nstr(divergence, 6)}），"
                "真实的 P_l 更高。"
            )
            raise DivergentLimit(message)
        extracted[power] = limit
        current = [value - limit * lam**power for value, lam in zip(current, logs)]
    return extracted


def sm_extract_from_samples(
    f: SampleFunction,
    degree: int,
    l_target: int,
    p_start: int,
    *,
    lower_rows: Optional[Mapping[Tuple[int, int], float]] = None,
    config: Optional[ExtractionConfig] = None,
) -> ExtractionReport:
    """按降 P 协议提取第 l_target 行的配对值 u_{l,p}。

    Parameters
    ----------
    f: SampleFunction
        m ↦ ⟨f^(m), h⟩，接受 mpmath 数并可重入。
    degree: int
        展开次数 D，仅用于日志与参数校验。
    l_target: int
        目标质量幂。
    p_start: int
        P_l 的初始猜测（不低于真实值）。
    lower_rows: Optional[Mapping[Tuple[int, int], float]]
        已提取的低阶行 {(l, p): 值}。
    config: Optional[ExtractionConfig]
        网格与精度配置。

    Raises
    ------
    DivergentLimit
        p_start 低于真实的 P_l。
    """

    if l_target < 0 or p_start < 0:
        raise ValueError("l_target 与 p_start 不能为负。")
    settings = config or ExtractionConfig()
    known = {key: value for key, value in (lower_rows or {}).items() if key[0] < l_target}
    history: List[Dict[int, object]] = []
    with mp.workdps(settings.dps):
        for grid in settings.grids():
            samples = []
            for mass in grid:
                lam = mp.log(mass)
                value = mp.mpf(f(mass))
                for (l, p), coefficient in known.items():
                    value -= mp.mpf(coefficient) * mass**l * lam**p
                samples.append((lam, value / mass**l_target))
            history.append(_peel(samples, p_start, settings.tolerance))
        final, previous = history[-1], history[-2]
        coefficients = {str(p): float(final[p]) for p in sorted(final)}
        errors = {str(p): float(abs(final[p] - previous[p])) for p in sorted(final)}
    unstable = [p for p, error in errors.items() if error > settings.tolerance]
    if unstable:
        LOGGER.warning(
            "Mass limit not stable across refinements",
            extra={"l": l_target, "powers": unstable, "tolerance": settings.tolerance},
        )
    significant = [int(p) for p, value in coefficients.items() if abs(value) > settings.tolerance]
    report = ExtractionReport(
        mass_power=l_target,
        coefficients=coefficients,
        errors=errors,
        log_power=max(significant) if significant else 0,
        smallest_mass=settings.smallest_mass,
    )
    LOGGER.info(
        "sm coefficients extracted",
        extra={"degree": degree, "l": l_target, "log_power": report.log_power},
    )
    return report


__all__ = [
    "ExtractionConfig",
    "sm_extract_from_samples",
]
