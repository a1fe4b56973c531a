"""Bit-stable serialization of reports: canonical JSON and long-format CSV."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

REPORT_VERSION = 1


def format_float(x: float) -> str:
    """17 significant digits; non-finite values become ``nan``/``inf``/``-inf``."""
    x = float(x) + 0.0    # folds -0.0 into 0.0
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int, out: list):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(_string(obj))
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for k, v in enumerate(obj):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        keys = sorted(obj)
        out.append("{\n")
        for k, key in enumerate(keys):
            out.append(pad + _string(key) + ": ")
            _encode(obj[key], indent, level + 1, out)
            out.append(",\n" if k < len(keys) - 1 else "\n")
        out.append(end + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _string(s: str) -> str:
    return json.dumps(s, ensure_ascii=True)


def canonical_json(obj, indent: int = 2) -> str:
    """Sorted keys, floats with 17 significant digits, NaN/inf as null."""
    out: list = []
    _encode(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def point_rows(names: Sequence[str], values: np.ndarray, coords: dict):
    """Long format: one row per (point, component)."""
    cnames = list(coords)
    cols = [np.asarray(coords[c], dtype=float) for c in cnames]
    npts = values.shape[1] if values.ndim == 2 else 0
    for p in range(npts):
        base = [p] + [float(c[p]) for c in cols]
        for r, name in enumerate(names):
            yield base + [name, float(values[r, p])]


def point_header(coords: dict) -> list:
    return ["point"] + list(coords) + ["component", "value"]
