"""
JSON output helpers for the CLI: orjson encoding with an "inf" token for
infinite floats, and the machine-readable error payload.
"""

from __future__ import annotations

import math
from typing import Any

import orjson

INF_TOKEN = "inf"


def json_safe(obj: Any) -> Any:
    """Copy of `obj` with non-finite floats replaced by string tokens."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return INF_TOKEN if obj > 0 else f"-{INF_TOKEN}"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [json_safe(v) for v in obj]
    return obj


def dumps(obj: Any, pretty: bool = False) -> str:
    option = orjson.OPT_SERIALIZE_NUMPY
    if pretty:
        option |= orjson.OPT_INDENT_2
    return orjson.dumps(json_safe(obj), option=option).decode("utf-8")


def error_payload(kind: str, message: str, exit_code: int) -> str:
    return dumps({"error": kind, "message": message, "exit_code": exit_code})
