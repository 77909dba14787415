"""Deterministic JSON emission with a fixed float policy.

All data artifacts (curve files, sweep lines, geometry exports) must be
byte-identical across runs and worker counts, so floats are always printed
with 17 significant digits (enough for exact double round-trip) through a
single code path.  The stdlib encoder cannot override float formatting,
hence this small recursive writer.  Parsing is plain ``json.loads``.
"""

from __future__ import annotations

import json
import math


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _write(obj, out: list, indent: int | None, level: int) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, complex):
        # complex values always serialize as [re, im]
        _write([obj.real, obj.imag], out, indent, level)
    elif isinstance(obj, dict):
        _write_items(list(obj.items()), "{", "}", out, indent, level, keyed=True)
    elif isinstance(obj, (list, tuple)):
        _write_items(list(obj), "[", "]", out, indent, level, keyed=False)
    elif hasattr(obj, "tolist"):  # numpy scalars/arrays
        _write(obj.tolist(), out, indent, level)
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def _write_items(items, open_ch, close_ch, out, indent, level, keyed) -> None:
    if not items:
        out.append(open_ch + close_ch)
        return
    if indent:
        pad = "\n" + " " * (indent * (level + 1))
        closing = "\n" + " " * (indent * level)
        colon = ": "
    else:
        pad = ""
        closing = ""
        colon = ":"
    out.append(open_ch)
    for i, it in enumerate(items):
        if i:
            out.append(",")
        out.append(pad)
        if keyed:
            key, val = it
            out.append(json.dumps(str(key)))
            out.append(colon)
            _write(val, out, indent, level + 1)
        else:
            _write(it, out, indent, level + 1)
    out.append(closing)
    out.append(close_ch)


def dumps(obj, indent: int | None = None) -> str:
    """Serialize *obj* to a JSON string with 17-digit float formatting."""
    out: list = []
    _write(obj, out, indent, 0)
    return "".join(out)


def dump_path(obj, path, indent: int | None = 2) -> None:
    text = dumps(obj, indent=indent)
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def loads(text: str):
    return json.loads(text)


def load_path(path):
    with open(path) as fh:
        return json.load(fh)
