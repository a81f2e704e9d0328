"""Report serialization: JSON with 17 significant digits, CSV spectrum tables."""
from __future__ import annotations

import dataclasses
import json
import math
from importlib import resources

import numpy as np

SCHEMA_ID = "shrinker-lab/1"


def to_plain(obj):
    """Convert numpy types and dataclasses into JSON-ready Python objects."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict, indent: int = 2) -> str:
    return _encode(to_plain(report), indent, 0) + "\n"


def spectrum_csv(rows: list[dict]) -> str:
    lines = ["index,value,residual,cluster_id"]
    for r in rows:
        lines.append(f"{r['index']},{r['value']:.17g},{r['residual']:.17g},{r['cluster_id']}")
    return "\n".join(lines) + "\n"


def load_schema() -> dict:
    return json.loads(resources.files("shrinker_lab").joinpath("report_schema.json").read_text())
