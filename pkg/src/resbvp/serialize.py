"""Canonical JSON emission.

All numeric output goes through a fixed 17-significant-digit decimal
format, which round-trips IEEE doubles exactly and makes reports
byte-identical across runs for identical inputs and seeds.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["format_float", "canonical_json"]


def format_float(x: float) -> str:
    """Format a double with 17 significant digits (exact round-trip)."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite value cannot be serialized")
    return format(x, ".17g")


def _emit(obj, out, indent):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            out.append(pad + "  " + '"' + str(key) + '": ')
            _emit(value, out, indent + 1)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        scalar = all(
            isinstance(v, (int, float, np.integer, np.floating, bool)) for v in seq
        )
        if scalar:
            out.append("[")
            for i, value in enumerate(seq):
                _emit(value, out, indent)
                if i + 1 < len(seq):
                    out.append(", ")
            out.append("]")
        else:
            out.append("[\n")
            for i, value in enumerate(seq):
                out.append(pad + "  ")
                _emit(value, out, indent + 1)
                out.append(",\n" if i + 1 < len(seq) else "\n")
            out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical_json(obj) -> str:
    """Serialize to deterministic JSON text (insertion order preserved)."""
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)
