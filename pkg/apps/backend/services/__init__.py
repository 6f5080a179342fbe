"""服务层导出：编排器、流水线与数值验证套件。"""

from apps.backend.services.orchestrator import OrchestratorResult, StateMachineOrchestrator, StateNode
from apps.backend.services.pipeline import (
    PIPELINES,
    PipelineConfig,
    PipelineOutcome,
    expand_pipeline,
    extend_pipeline,
    freedom_pipeline,
    hadamard_split_pipeline,
    run_pipeline,
    setting_sun_hat_pipeline,
    setting_sun_pipeline,
)
from apps.backend.services.verification import SUITES, VerifyConfig, run_verification

__all__ = [
    "StateMachineOrchestrator",
    "StateNode",
    "OrchestratorResult",
    "PIPELINES",
    "PipelineConfig",
    "PipelineOutcome",
    "setting_sun_pipeline",
    "setting_sun_hat_pipeline",
    "hadamard_split_pipeline",
    "freedom_pipeline",
    "expand_pipeline",
    "extend_pipeline",
    "run_pipeline",
    "SUITES",
    "VerifyConfig",
    "run_verification",
]
