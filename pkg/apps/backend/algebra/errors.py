"""引擎统一异常层级，所有可预期失败都派生自 SmxError。"""

from __future__ import annotations


class SmxError(ValueError):
    """符号/数值引擎的基础异常。"""


class IllDefinedProduct(SmxError):
    """同一变量组内出现分布与奇异因子的逐点乘积。"""


class InhomogeneousDimension(SmxError):
    """求和项的质量量纲不一致。"""


class NotAlmostHomogeneous(SmxError):
    """在 N_max 范围内找不到零化算子幂次。"""


class DivergentDirect(SmxError):
    """scaling degree 不低于环境维数，无法直接延拓。"""


class UnsupportedForm(SmxError):
    """输入形式超出该延拓方法的适用范围。"""


class ResonantDegree(SmxError):
    """正则参数被特化到使矩方程组奇异的取值。"""


class TruncationTooSmall(SmxError):
    """请求阶数超过已计算的截断阶。"""


class DivergentLimit(SmxError):
    """质量极限随 m↓0 发散，通常表示 P 的初始猜测偏低。"""


class DegenerateRegulators(SmxError):
    """投影所需的 h·ζ 两两不同条件不成立。"""


class OddDimension(SmxError):
    """正则化传播子仅支持偶数维。"""


class UnsupportedDerivative(SmxError):
    """导数请求无法在不变量微积分中表达。"""


class NonIntegrable(SmxError):
    """被积函数在原点不可积且缺少延拓标记。"""


class UnsupportedGeometry(SmxError):
    """数值配对不支持的几何或度规。"""


class NoConvergence(SmxError):
    """截断序列的增量没有收缩。"""


class FitFailure(SmxError):
    """对数多项式拟合在容差内失败。"""


__all__ = [
    "SmxError",
    "IllDefinedProduct",
    "InhomogeneousDimension",
    "NotAlmostHomogeneous",
    "DivergentDirect",
    "UnsupportedForm",
    "ResonantDegree",
    "TruncationTooSmall",
    "DivergentLimit",
    "DegenerateRegulators",
    "OddDimension",
    "UnsupportedDerivative",
    "NonIntegrable",
    "UnsupportedGeometry",
    "NoConvergence",
    "FitFailure",
]
