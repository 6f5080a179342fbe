"""Pydantic v2 统一出口，封装常用导入与辅助函数。"""

from __future__ import annotations

import json
import math
import re
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

_FLOAT_MARK = "__f17__"
_FLOAT_PATTERN = re.compile(r'"' + _FLOAT_MARK + r'([^"]*)"')


def model_dump(payload: Any, **kwargs: Any) -> Any:
    """序列化 Pydantic v2 模型，返回可 JSON 化对象。"""

    if payload is None:
        return None
    if isinstance(payload, BaseModel):
        if "by_alias" not in kwargs:
            kwargs["by_alias"] = True
        if "mode" not in kwargs:
            kwargs["mode"] = "json"
        return payload.model_dump(**kwargs)
    if hasattr(payload, "as_payload"):
        return payload.as_payload()
    if isinstance(payload, dict):
        return {key: model_dump(value, **kwargs) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [model_dump(item, **kwargs) for item in payload]
    if isinstance(payload, (str, int, float, bool)):
        return payload
    raise TypeError("无法序列化给定对象，需为 Pydantic 模型或基础类型。")


def _mark_floats(payload: Any) -> Any:
    if isinstance(payload, bool):
        return payload
    if isinstance(payload, float):
        if not math.isfinite(payload):
            return str(payload)
        return _FLOAT_MARK + format(payload, ".17g")
    if isinstance(payload, dict):
        return {str(key): _mark_floats(value) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_mark_floats(item) for item in payload]
    return payload


def canonical_json(payload: Any, *, indent: int | None = 2) -> str:
    """确定性 JSON：键排序、浮点数 17 位有效数字、非 ASCII 原样输出。"""

    marked = _mark_floats(model_dump(payload))
    text = json.dumps(marked, ensure_ascii=False, indent=indent, sort_keys=True)
    return _FLOAT_PATTERN.sub(lambda match: match.group(1), text)


__all__ = [
    "BaseModel",
    "Field",
    "ConfigDict",
    "model_validator",
    "model_dump",
    "canonical_json",
]
