"""FastAPI 路由定义。"""

from __future__ import annotations

import logging
from typing import Callable, Dict

from fastapi import APIRouter, Depends, HTTPException, status

from apps.backend.algebra.errors import SmxError
from apps.backend.api.dependencies import get_clock, get_report_recorder
from apps.backend.api.schemas import (
    DimregRequest,
    DimregResponse,
    ErrorPayload,
    ExampleRequest,
    ExpandRequest,
    ExtendRequest,
    PipelineResponse,
    SchemaExportResponse,
)
from apps.backend.contracts.documents import ExtensionDocument, LaurentDocument, RegSmDocument, SmExpansionDocument
from apps.backend.contracts.reports import (
    CountertermReport,
    HadamardReport,
    PipelineReport,
    RegCheckReport,
    SmCheckReport,
)
from apps.backend.contracts.trace import TraceRecord
from apps.backend.dimreg import LineIndexing, RegFactor, reg_check, reg_product_sm
from apps.backend.infra.persistence import ReportRecorder
from apps.backend.services.pipeline import PIPELINES, PipelineOutcome, expand_pipeline, extend_pipeline, run_pipeline

LOGGER = logging.getLogger(__name__)

router = APIRouter()

SCHEMA_EXPORT_MODELS: dict[str, type] = {
    SmExpansionDocument.schema_name(): SmExpansionDocument,
    ExtensionDocument.schema_name(): ExtensionDocument,
    LaurentDocument.schema_name(): LaurentDocument,
    RegSmDocument.schema_name(): RegSmDocument,
    SmCheckReport.schema_name(): SmCheckReport,
    RegCheckReport.schema_name(): RegCheckReport,
    CountertermReport.schema_name(): CountertermReport,
    HadamardReport.schema_name(): HadamardReport,
    PipelineReport.schema_name(): PipelineReport,
    TraceRecord.schema_name(): TraceRecord,
}


def _record_request(recorder: ReportRecorder, endpoint: str, payload: object) -> None:
    """统一请求落盘入口。"""

    recorder.record(endpoint=endpoint, direction="request", payload=payload)


def _record_response(recorder: ReportRecorder, endpoint: str, payload: object) -> None:
    """统一响应落盘入口。"""

    recorder.record(endpoint=endpoint, direction="response", payload=payload)


def _record_error(
    recorder: ReportRecorder,
    endpoint: str,
    *,
    error_type: str,
    error_message: str,
    status_code: int,
) -> None:
    """落盘错误信息并记录日志。"""

    LOGGER.warning(
        "API 调用失败",
        extra={
            "endpoint": endpoint,
            "error_type": error_type,
            "status_code": status_code,
        },
    )
    recorder.record_error(
        endpoint=endpoint,
        payload={
            "error_type": error_type,
            "error_message": error_message,
            "status_code": status_code,
        },
    )


def _guarded(
    recorder: ReportRecorder,
    endpoint: str,
    action: Callable[[], object],
) -> object:
    """执行 action；引擎错误映射为 422，未知名称映射为 404，其余记录后继续抛出。"""

    try:
        return action()
    except SmxError as error:
        _record_error(
            recorder=recorder,
            endpoint=endpoint,
            error_type=error.__class__.__name__,
            error_message=str(error),
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        )
        detail = ErrorPayload(type=error.__class__.__name__, message=str(error)).model_dump()
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=detail) from error
    except KeyError as error:
        message = str(error.args[0]) if error.args else str(error)
        _record_error(
            recorder=recorder,
            endpoint=endpoint,
            error_type=error.__class__.__name__,
            error_message=message,
            status_code=status.HTTP_404_NOT_FOUND,
        )
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=message) from error
    except Exception as error:  # noqa: BLE001 - 统一捕获记录后继续抛出
        LOGGER.exception("引擎出现未预期错误", extra={"endpoint": endpoint})
        _record_error(
            recorder=recorder,
            endpoint=endpoint,
            error_type=error.__class__.__name__,
            error_message=str(error),
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        )
        raise


def _pipeline_response(outcome: PipelineOutcome) -> PipelineResponse:
    return PipelineResponse(report=outcome.report, trace=outcome.trace)


@router.post("/api/expand", response_model=PipelineResponse)
def expand(
    request: ExpandRequest,
    clock=Depends(get_clock),
    recorder: ReportRecorder = Depends(get_report_recorder),
) -> PipelineResponse:
    """模型传播子 n 次幂的 sm 表与 sm_check。"""

    endpoint = "api_expand"
    _record_request(recorder=recorder, endpoint=endpoint, payload=request)
    outcome = _guarded(
        recorder,
        endpoint,
        lambda: expand_pipeline(request.to_config(), exponent=request.exponent, group=request.group, clock=clock),
    )
    response = _pipeline_response(outcome)
    _record_response(recorder=recorder, endpoint=endpoint, payload=response)
    return response


@router.post("/api/extend", response_model=PipelineResponse)
def extend(
    request: ExtendRequest,
    clock=Depends(get_clock),
    recorder: ReportRecorder = Depends(get_report_recorder),
) -> PipelineResponse:
    """逐行延拓传播子幂次，MS 行附带 Laurent 级数与方括号。"""

    endpoint = "api_extend"
    _record_request(recorder=recorder, endpoint=endpoint, payload=request)
    outcome = _guarded(
        recorder,
        endpoint,
        lambda: extend_pipeline(
            request.to_config(request.engine()),
            exponent=request.exponent,
            group=request.group,
            ambient=request.ambient,
            clock=clock,
        ),
    )
    response = _pipeline_response(outcome)
    _record_response(recorder=recorder, endpoint=endpoint, payload=response)
    return response


@router.post("/api/examples/{name}", response_model=PipelineResponse)
def run_example(
    name: str,
    request: ExampleRequest,
    clock=Depends(get_clock),
    recorder: ReportRecorder = Depends(get_report_recorder),
) -> PipelineResponse:
    """运行内置示例流水线，名称见 PIPELINES。"""

    endpoint = f"api_examples_{name}"
    _record_request(recorder=recorder, endpoint=endpoint, payload=request)
    outcome = _guarded(recorder, endpoint, lambda: run_pipeline(name, request.to_config(), clock=clock))
    response = _pipeline_response(outcome)
    recorder.write_report(name=f"examples/{name}", payload=outcome.report)
    _record_response(recorder=recorder, endpoint=endpoint, payload=response)
    return response


@router.get("/api/examples", response_model=list[str])
def list_examples() -> list[str]:
    return list(PIPELINES)


@router.post("/api/dimreg", response_model=DimregResponse)
def dimreg(
    request: DimregRequest,
    recorder: ReportRecorder = Depends(get_report_recorder),
) -> DimregResponse:
    """正则化传播子乘积的 (p, c, h) 分箱与性质检查。"""

    endpoint = "api_dimreg"
    _record_request(recorder=recorder, endpoint=endpoint, payload=request)

    def _expand() -> DimregResponse:
        indexing = LineIndexing(vertices=request.vertices)
        factors = [RegFactor(pair=tuple(item.pair), boxes=item.boxes) for item in request.factors]
        expansion = reg_product_sm(factors, indexing, dimension=request.dimension, order=request.order)
        return DimregResponse(expansion=expansion.to_document(), check=reg_check(expansion))

    response = _guarded(recorder, endpoint, _expand)
    _record_response(recorder=recorder, endpoint=endpoint, payload=response)
    return response


@router.get("/api/schema/export", response_model=SchemaExportResponse)
def export_contract_schemas(
    recorder: ReportRecorder = Depends(get_report_recorder),
) -> SchemaExportResponse:
    """导出核心契约的 JSONSchema，并落盘保存。"""

    endpoint = "api_schema_export"
    _record_request(recorder=recorder, endpoint=endpoint, payload={})
    schemas: Dict[str, dict] = {}
    for schema_name, model in SCHEMA_EXPORT_MODELS.items():
        schemas[schema_name] = model.model_json_schema()
        recorder.write_report(name=f"schemas/{schema_name}", payload=schemas[schema_name])
    response = SchemaExportResponse(schemas=schemas)
    _record_response(recorder=recorder, endpoint=endpoint, payload=response)
    return response


@router.get("/api/schema/{name}")
def export_contract_schema(name: str) -> dict:
    """单个契约的 JSONSchema。"""

    model = SCHEMA_EXPORT_MODELS.get(name)
    if model is None:
        message = f"未知的 schema {name!r}，可选 {sorted(SCHEMA_EXPORT_MODELS)}。"
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=message)
    return model.model_json_schema()
