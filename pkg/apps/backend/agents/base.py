"""Agent 抽象定义，约束输入输出与追踪机制。"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Protocol

from apps.backend.algebra.expr import Expr
from apps.backend.algebra.normal import atoms
from apps.backend.compat import canonical_json
from apps.backend.infra.clock import UtcClock
from apps.backend.infra.tracing import TraceRecorder
from apps.backend.smx.expansion import SmExpansion


@dataclass(frozen=True)
class AgentContext:
    """Agent 执行上下文，封装任务标识、流水线名称与追踪记录器。"""

    task_id: str
    pipeline: str
    trace_recorder: TraceRecorder
    clock: UtcClock
    parent_span_id: Optional[str] = None


@dataclass(frozen=True)
class AgentOutcome:
    """Agent 执行结果包装，携带输出与 Span 记录。"""

    output: object
    span_id: str
    trace_span: object


class Agent(Protocol):
    """所有 Agent 必须实现的接口。"""

    name: str

    def run(self, context: AgentContext, payload: object) -> AgentOutcome:
        """执行 Agent 逻辑。

        Parameters
        ----------
        context: AgentContext
            任务级上下文。
        payload: object
            上一个阶段的输出或流水线输入。

        Returns
        -------
        AgentOutcome
            包含阶段产物与 Trace Span 的执行结果。
        """


def count_terms(*items: object) -> int:
    """规范项个数；SmExpansion 按各行累加。"""

    total = 0
    for item in items:
        if isinstance(item, SmExpansion):
            total += sum(len(atoms(row.expr)) for row in item.rows)
        elif isinstance(item, Expr):
            total += len(atoms(item))
    return total


def input_digest(document: object) -> str:
    """输入文档的 sha256 摘要，基于确定性 JSON。"""

    return hashlib.sha256(canonical_json(document, indent=None).encode("utf-8")).hexdigest()
