"""Canonical JSON: sorted keys, no insignificant whitespace, stable numbers.

Repository archives and workflow files are compared byte-for-byte, so every
number must have exactly one rendering: integers as-is, decimals with no
exponent and no trailing zeros. Floats are accepted only for computed API
payloads (run records, aggregates); archive builders use Decimal throughout.
"""

from __future__ import annotations

import json
import math
from decimal import Decimal
from typing import Any


def format_decimal(value: Decimal) -> str:
    """Render a decimal without exponent notation or trailing zeros."""
    if value == 0:
        return "0"
    return format(value.normalize(), "f")


def _encode(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, Decimal):
        out.append(format_decimal(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite float not representable in JSON: {value!r}")
        out.append(repr(value))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {type(key).__name__}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _encode(value[key], out)
        out.append("}")
    else:
        raise TypeError(f"value of type {type(value).__name__} is not canonically serializable")


def dumps(value: Any) -> str:
    out: list[str] = []
    _encode(value, out)
    return "".join(out)


def dump_bytes(value: Any) -> bytes:
    return dumps(value).encode("utf-8")


def loads(data: bytes | str) -> Any:
    """Parse JSON with real numbers as Decimal so round trips stay exact."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data, parse_float=Decimal)
