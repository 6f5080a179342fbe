"""数值验证套件：欧氏约定下把符号结论与求积、极限、拟合逐条对照。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
import sympy as sp
from mpmath import mp

from apps.backend.algebra.expr import MetricConvention, Overline, inv
from apps.backend.compat import model_dump
from apps.backend.contracts.reports import PipelineReport, PropertyCheck
from apps.backend.dimreg import LineIndexing, RegFactor, coefficient_symbols, reg_product_sm
from apps.backend.extension.diffren import diff_renorm_extend
from apps.backend.numeric import (
    NumericConfig,
    TestFunction,
    direct_limit_check,
    reg_massless_limit_check,
    restriction_oracle,
    scaling_fit,
)
from apps.backend.smx.extract import ExtractionConfig, sm_extract_from_samples

LOGGER = logging.getLogger(__name__)

SUITES = ("direct-limit", "scaling-fit", "oracle", "massless-limit", "extract")


@dataclass(frozen=True)
class VerifyConfig:
    """验证参数；seed 决定随机系数，同一 seed 给出逐字节相同的报告。"""

    tolerance: float = 1e-6
    seed: int = 0
    workers: int = 1

    def numeric(self) -> NumericConfig:
        return NumericConfig(tolerance=self.tolerance, workers=self.workers)


def _check(name: str, passed: bool, detail: str = "") -> PropertyCheck:
    return PropertyCheck(name=name, passed=bool(passed), detail="" if passed else detail)


def _gauss(ambient: int = 4) -> TestFunction:
    return TestFunction(family="gauss", width=1.0, ambient=ambient)


def _shell(ambient: int = 4) -> TestFunction:
    return TestFunction(family="bump", center=1.5, width=0.5, ambient=ambient)


def verify_direct_limit(config: VerifyConfig) -> tuple[List[PropertyCheck], Dict[str, object]]:
    """sd < k 时截断序列收敛；sd = k 时被标记为不收敛。"""

    settings = config.numeric()
    integrable = direct_limit_check(inv("x", -1, 1), _gauss(), config=settings)
    borderline = direct_limit_check(inv("x", -2), _gauss(), config=settings)
    checks = [
        _check("direct-limit.log/X", integrable.converged, f"极限未收敛：{integrable.samples[-1].increment}"),
        _check("direct-limit.X^-2-flagged", not borderline.converged, "sd = k 的输入被误判为收敛。"),
    ]
    documents = {"log/X": model_dump(integrable), "X^-2": model_dump(borderline)}
    return checks, documents


def verify_scaling_fit(config: VerifyConfig) -> tuple[List[PropertyCheck], Dict[str, object]]:
    """Overline(log(M²X)/(4X)) 在 D = 2 下按 log ρ 一次缩放，纯幂 X^-1 为零次。"""

    settings = config.numeric()
    tolerance = max(config.tolerance * 1e-2, 1e-10)
    with_log = Overline(child=inv("x", -1, 1, coeff=sp.Rational(1, 4)), ambient=4)
    plain = Overline(child=inv("x", -1), ambient=4)
    log_report = scaling_fit(with_log, _gauss(), sp.Integer(2), tolerance=tolerance, config=settings)
    plain_report = scaling_fit(plain, _gauss(), sp.Integer(2), tolerance=tolerance, config=settings)
    checks = [
        _check("scaling-fit.log-degree", log_report.degree == 1, f"拟合次数 {log_report.degree} ≠ 1。"),
        _check("scaling-fit.plain-degree", plain_report.degree == 0, f"拟合次数 {plain_report.degree} ≠ 0。"),
    ]
    return checks, {"log": model_dump(log_report), "plain": model_dump(plain_report)}


def verify_oracle(config: VerifyConfig) -> tuple[List[PropertyCheck], Dict[str, object]]:
    """微分重整化结果在离开原点的试验函数上与原式配对一致。"""

    settings = config.numeric()
    metric = MetricConvention.euclidean(dimension=4)
    checks: List[PropertyCheck] = []
    documents: Dict[str, object] = {}
    cases = {
        "X^-2": inv("x", -2),
        "log/X^2": inv("x", -2, 1),
        "X^-3": inv("x", -3),
    }
    for label, source in cases.items():
        result = diff_renorm_extend(source, 4, metric=metric)
        check = restriction_oracle(result, source, _shell(), config=settings)
        checks.append(_check(f"oracle.{label}", check.passed, check.detail))
        documents[label] = model_dump(result.to_document())
    return checks, documents


def verify_massless_limit(config: VerifyConfig) -> tuple[List[PropertyCheck], Dict[str, object]]:
    """两条正则化线乘积在 Re ζ < 1/2 时 m↓0 极限等于无质量分箱之和。"""

    rng = np.random.default_rng(config.seed)
    indexing = LineIndexing(vertices=2)
    order = 2
    expansion = reg_product_sm([RegFactor(pair=(1, 2)), RegFactor(pair=(1, 2))], indexing, dimension=4, order=order)
    symbols = coefficient_symbols(indexing.group((1, 2)), order)
    coefficients = {symbol: float(rng.uniform(0.5, 1.5)) for symbol in symbols["h"] + symbols["c"]}
    zeta = float(rng.uniform(0.05, 0.45))
    check = reg_massless_limit_check(
        expansion,
        {indexing.group((1, 2)): 1.3},
        {indexing.zeta((1, 2)): zeta},
        coefficients,
        tolerance=config.tolerance,
    )
    named = {sp.sstr(key): value for key, value in sorted(coefficients.items(), key=str)}
    documents = {"zeta": zeta, "coefficients": named}
    return [_check("massless-limit", check.passed, check.detail)], documents


def verify_extract(config: VerifyConfig) -> tuple[List[PropertyCheck], Dict[str, object]]:
    """由 f(m) = a + m²(b + c·log m) + m⁴ 的样本还原 (b, c)。"""

    rng = np.random.default_rng(config.seed)
    a, b, c = (float(value) for value in rng.uniform(1.0, 9.0, size=3))

    def planted(mass):
        return a + mass**2 * (b + c * mp.log(mass)) + mass**4

    settings = ExtractionConfig()
    report = sm_extract_from_samples(planted, 0, 2, 1, lower_rows={(0, 0): a}, config=settings)
    got_b, got_c = report.coefficients.get("0", 0.0), report.coefficients.get("1", 0.0)
    passed = abs(got_b - b) < settings.tolerance and abs(got_c - c) < settings.tolerance
    detail = f"提取得到 ({got_b:.6g}, {got_c:.6g})，期望 ({b:.6g}, {c:.6g})。"
    documents = {"planted": {"a": a, "b": b, "c": c}, "report": model_dump(report)}
    return [_check("extract.l2", passed, detail)], documents


RUNNERS: Dict[str, Callable[[VerifyConfig], tuple[List[PropertyCheck], Dict[str, object]]]] = {
    "direct-limit": verify_direct_limit,
    "scaling-fit": verify_scaling_fit,
    "oracle": verify_oracle,
    "massless-limit": verify_massless_limit,
    "extract": verify_extract,
}


def run_verification(suite: str, config: Optional[VerifyConfig] = None) -> PipelineReport:
    """运行单个套件，或 suite="all" 时依次运行全部。"""

    settings = config or VerifyConfig()
    names = list(SUITES) if suite == "all" else [suite]
    unknown = [name for name in names if name not in RUNNERS]
    if unknown:
        message = f"未知的验证套件 {unknown}，可选 {SUITES + ('all',)}。"
        raise KeyError(message)
    checks: List[PropertyCheck] = []
    documents: Dict[str, object] = {}
    for name in names:
        suite_checks, suite_documents = RUNNERS[name](settings)
        checks.extend(suite_checks)
        documents[name] = suite_documents
        passed = all(item.passed for item in suite_checks)
        LOGGER.info("Verification suite finished", extra={"suite": name, "passed": passed})
    return PipelineReport(
        pipeline=f"verify.{suite}",
        documents=documents,
        checks=checks,
        passed=all(item.passed for item in checks),
        notes=["数值检查只在欧氏约定 s=+1、M=1 下进行。"],
    )


__all__ = [
    "SUITES",
    "VerifyConfig",
    "verify_direct_limit",
    "verify_scaling_fit",
    "verify_oracle",
    "verify_massless_limit",
    "verify_extract",
    "run_verification",
]
