"""Machine-readable outputs: CSV tables and JSON summaries.

Floats are serialized with 17 significant digits (round-trip exact, no
locale dependence); identical inputs therefore produce byte-identical
files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

__all__ = ["fmt_float", "write_csv", "write_json"]


def fmt_float(value: float) -> str:
    return format(float(value), ".17g")


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def write_csv(path: str | Path, header: str, rows) -> Path:
    path = Path(path)
    lines = [header]
    lines.extend(",".join(_fmt_cell(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n")
    return path
