"""JSON report writing (17 significant digits) and schema validation."""

from __future__ import annotations

import json
import math
import os
from importlib import resources
from pathlib import Path

import jsonschema

SCHEMA_FILES = {"eval": "eval_report.schema.json", "bench": "bench_report.schema.json"}


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("reports may not contain non-finite floats")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def load_schema(kind: str) -> dict:
    text = resources.files("hbmatch.evaluation").joinpath(SCHEMA_FILES[kind]).read_text()
    return json.loads(text)


def validate(report: dict, kind: str):
    jsonschema.validate(report, load_schema(kind))


def write_report(report: dict, path, kind: str) -> Path:
    validate(report, kind)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(report))
    os.replace(tmp, path)
    return path
