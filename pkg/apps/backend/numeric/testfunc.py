"""径向试验函数：紧支撑 bump 或 Gauss 包络乘以多项式。

剖面以 sympy 表达式给出，导数、径向 Laplace 与 Euler 算子都先符号求导
再 lambdify，避免数值差分。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from math import gamma, inf, pi
from typing import Callable, Tuple

import sympy as sp
from mpmath import mp

LOGGER = logging.getLogger(__name__)

FAMILIES = ("bump", "gauss")

R = sp.Symbol("r", positive=True)

MAX_DERIVATIVE = 4

# exp(-u²) 在 u 超过该值后低于双精度最小值
GAUSS_CUTOFF = 27.0


def sphere_area(ambient: int) -> float:
    """|S^(k-1)| = 2π^(k/2)/Γ(k/2)。"""

    return 2 * pi ** (ambient / 2) / gamma(ambient / 2)


@dataclass(frozen=True)
class TestFunction:
    """径向试验函数 h(x) = P(|x|/s)·env(|x|/s)。

    Attributes
    ----------
    family: str
        bump 时 env(r) = exp(-1/(1-u²))，u = (r - center)/width，支撑在
        [center - width, center + width]；gauss 时 env(r) = exp(-(r/width)²)。
    center, width: float
        包络参数；gauss 族忽略 center。
    polynomial: Tuple[float, ...]
        P(r) = Σ_n polynomial[n]·rⁿ。只含偶次项时 h 在原点光滑。
    ambient: int
        空间维数 k。
    scale: float
        伸缩 h(·/s)。
    """

    __test__ = False

    family: str = "bump"
    center: float = 1.5
    width: float = 0.5
    polynomial: Tuple[float, ...] = (1.0,)
    ambient: int = 4
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            message = f"未知的试验函数族 {self.family!r}，可选 {FAMILIES}。"
            raise ValueError(message)
        if self.width <= 0 or self.scale <= 0:
            message = f"width={self.width} 与 scale={self.scale} 必须为正。"
            raise ValueError(message)
        if self.family == "bump" and self.center < self.width:
            message = f"bump 的支撑 [{self.center - self.width}, {self.center + self.width}] 不能越过原点。"
            raise ValueError(message)
        if not self.polynomial or not any(self.polynomial):
            raise ValueError("多项式部分不能为零。")
        if self.ambient < 1:
            message = f"ambient={self.ambient} 必须为正。"
            raise ValueError(message)

    def scaled(self, factor: float) -> "TestFunction":
        """h(·/ρ)。"""

        return replace(self, scale=self.scale * factor)

    def support(self) -> Tuple[float, float]:
        """|x| 的支撑区间；gauss 族截断在 GAUSS_CUTOFF 个宽度处。"""

        if self.family == "bump":
            return (self.center - self.width) * self.scale, (self.center + self.width) * self.scale
        return 0.0, GAUSS_CUTOFF * self.width * self.scale

    def vanishing_order(self) -> float:
        """原点处的消失阶；支撑离开原点时为 inf。"""

        low, _ = self.support()
        if low > 0:
            return inf
        return float(next(index for index, value in enumerate(self.polynomial) if value))

    def profile(self) -> sp.Expr:
        """符号剖面 h(r)。"""

        return _profile(self.family, self.center, self.width, self.polynomial, self.scale)

    def _inside(self, r: float) -> bool:
        low, high = self.support()
        if self.family == "gauss":
            return r < high
        return low < r < high

    def value(self, r: float) -> float:
        return self.derivative(r, 0)

    def derivative(self, r: float, order: int) -> float:
        """d^order h/dr^order，order ≤ 4。"""

        if not 0 <= order <= MAX_DERIVATIVE:
            message = f"导数阶 {order} 超出 [0, {MAX_DERIVATIVE}]。"
            raise ValueError(message)
        if not self._inside(r):
            return 0.0
        return float(_compiled(self, ("d", order))(r))

    def laplacian(self, r: float, times: int = 1) -> float:
        """径向 Laplace 的 times 次幂 Δ^times h。"""

        if times < 0:
            raise ValueError("times 不能为负。")
        if not self._inside(r):
            return 0.0
        return float(_compiled(self, ("lap", times))(r))

    def euler_falling(self, r: float, order: int) -> float:
        """E(E-1)…(E-order+1) h，E = r·d/dr，即 z^β∂_β 的全缩并。"""

        if not self._inside(r):
            return 0.0
        return float(_compiled(self, ("euler", order))(r))

    def origin_value(self, boxes: int = 0) -> float:
        """(Δ^boxes h)(0)；支撑离开原点时为 0。"""

        low, _ = self.support()
        if low > 0:
            return 0.0
        value = sp.limit(_operator_expr(self, ("lap", boxes)), R, 0)
        return float(value)


def _profile(family: str, center: float, width: float, polynomial: Tuple[float, ...], scale: float) -> sp.Expr:
    u = R / sp.nsimplify(scale)
    poly = sum((sp.nsimplify(value) * u**index for index, value in enumerate(polynomial) if value), sp.Integer(0))
    if family == "bump":
        t = (u - sp.nsimplify(center)) / sp.nsimplify(width)
        envelope = sp.exp(-1 / (1 - t**2))
    else:
        envelope = sp.exp(-((u / sp.nsimplify(width)) ** 2))
    return poly * envelope


def radial_laplacian(expr: sp.Expr, ambient: int) -> sp.Expr:
    """Δ f = f'' + (k-1)/r·f'。"""

    return sp.diff(expr, R, 2) + (ambient - 1) / R * sp.diff(expr, R)


def _operator_expr(h: TestFunction, key: Tuple[str, int]) -> sp.Expr:
    kind, order = key
    current = h.profile()
    if kind == "d":
        return sp.diff(current, R, order) if order else current
    if kind == "lap":
        for _ in range(order):
            current = radial_laplacian(current, h.ambient)
        return current
    for j in range(order):
        current = R * sp.diff(current, R) - j * current
    return current


@lru_cache(maxsize=256)
def _compiled(h: TestFunction, key: Tuple[str, int]) -> Callable[[float], float]:
    expr = _operator_expr(h, key)
    LOGGER.debug("Test function operator compiled", extra={"family": h.family, "operator": key[0], "order": key[1]})
    return sp.lambdify(R, expr, modules="numpy")


def finite_difference(h: TestFunction, r: float, order: int, dps: int = 30) -> float:
    """高精度数值差分 d^order h/dr^order，用于校验符号导数。"""

    function = sp.lambdify(R, h.profile(), modules="mpmath")
    with mp.workdps(dps):
        return float(mp.diff(function, mp.mpf(r), order))


__all__ = ["FAMILIES", "R", "TestFunction", "sphere_area", "radial_laplacian", "finite_difference"]
