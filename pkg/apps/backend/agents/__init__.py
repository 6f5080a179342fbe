"""流水线各阶段的 Agent。"""

from apps.backend.agents.base import Agent, AgentContext, AgentOutcome, count_terms, input_digest
from apps.backend.agents.expansion import ExpandPayload, SmExpansionAgent, expand_product
from apps.backend.agents.extension import ExtendPayload, SmExtensionAgent
from apps.backend.agents.freedom import FreedomOutcome, FreedomPayload, FreedomScanAgent
from apps.backend.agents.hadamard import HadamardPayload, HadamardSplitAgent
from apps.backend.agents.subtraction import (
    MinimalSubtraction,
    MinimalSubtractionAgent,
    RowSubtraction,
    SubtractPayload,
    row_label,
    summarize_rows,
)

__all__ = [
    "Agent",
    "AgentContext",
    "AgentOutcome",
    "count_terms",
    "input_digest",
    "ExpandPayload",
    "SmExpansionAgent",
    "expand_product",
    "ExtendPayload",
    "SmExtensionAgent",
    "FreedomPayload",
    "FreedomOutcome",
    "FreedomScanAgent",
    "HadamardPayload",
    "HadamardSplitAgent",
    "SubtractPayload",
    "RowSubtraction",
    "MinimalSubtraction",
    "MinimalSubtractionAgent",
    "row_label",
    "summarize_rows",
]
