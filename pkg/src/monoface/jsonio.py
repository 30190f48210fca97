"""Deterministic JSON text: sorted keys, floats with 17 significant digits.

Infinite values become the strings "+inf" / "-inf" and NaN becomes "nan",
so the output stays valid JSON.
"""
from __future__ import annotations

import json
import math

import numpy as np


def _float(v):
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"+inf"' if v > 0 else '"-inf"'
    return format(v, ".17g")


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = ": "
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k)) + sep)
            _emit(v, indent, level + 1, out)
            out.append(("," if i < len(items) - 1 else "") + nl)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        # numeric rows stay on one line for readability
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq)
        if flat or not indent:
            parts = []
            for v in seq:
                sub = []
                _emit(v, 0, 0, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[" + nl)
        for i, v in enumerate(seq):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(("," if i < len(seq) - 1 else "") + nl)
        out.append(end + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    out = []
    _emit(obj, indent, 0, out)
    return "".join(out) + ("\n" if indent else "")


def fmt_float(v):
    """17-significant-digit text for CSV cells."""
    v = float(v)
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def parse_float(v):
    if isinstance(v, str):
        return {"+inf": math.inf, "inf": math.inf, "-inf": -math.inf}.get(v, float(v))
    return float(v)
