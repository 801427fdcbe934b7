"""Law literals and record serialization.

Law literals look like ``discrete:W=1,2;p=0.5,0.5`` or ``pareto:alpha=3.5,xm=1``
(``xm`` defaults to 1).  Records are flat dicts written either as CSV, preceded
by ``# key=value`` comment lines, or as JSON lines.  Floats are written with
17 significant digits so every value reads back bit-for-bit.
"""
from __future__ import annotations

import io as _io
import json
import math
import re
import sys
from typing import Iterable, Optional

import numpy as np

from .errors import IoError, ParseError, SchemaError
from .rng import derive_seed  # noqa: F401  (re-exported for callers of the I/O layer)
from .weights import DiscreteLaw, ParetoLaw, WeightLaw

_NUM = re.compile(r"\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*$")


def _number(text: str, pos: int) -> float:
    if not _NUM.match(text):
        raise ParseError(f"expected a number, got {text.strip()!r}", pos)
    return float(text)


def _split(text: str, sep: str, offset: int):
    """Split on sep, yielding (piece, absolute offset of the piece)."""
    start = 0
    for piece in text.split(sep):
        yield piece, offset + start
        start += len(piece) + 1


def _key_values(body: str, sep: str, offset: int):
    """{key: (raw value, value offset)} and {key: key offset}."""
    out, keypos = {}, {}
    for piece, pos in _split(body, sep, offset):
        if "=" not in piece:
            raise ParseError(f"expected key=value, got {piece.strip()!r}", pos)
        key, raw = piece.split("=", 1)
        k = key.strip()
        if not k:
            raise ParseError("empty key", pos)
        if k in out:
            raise ParseError(f"duplicate key {k!r}", pos)
        out[k] = (raw, pos + len(key) + 1)
        keypos[k] = pos + len(key) - len(key.lstrip())
    return out, keypos


def parse_law(text: str) -> WeightLaw:
    """Parse a law literal; ParseError carries the offending character offset."""
    if not isinstance(text, str):
        raise ParseError("law literal must be a string", 0)
    colon = text.find(":")
    if colon < 0:
        raise ParseError("expected '<family>:' prefix", len(text))
    family = text[:colon].strip().lower()
    body = text[colon + 1:]
    if family == "discrete":
        kv, keypos = _key_values(body, ";", colon + 1)
        extra = set(kv) - {"W", "p"}
        if extra:
            k = sorted(extra)[0]
            raise ParseError(f"unknown discrete key {k!r}", keypos[k])
        for k in ("W", "p"):
            if k not in kv:
                raise ParseError(f"discrete law needs {k}=...", len(text))
        lists = {k: [_number(t, p) for t, p in _split(kv[k][0], ",", kv[k][1])] for k in ("W", "p")}
        return DiscreteLaw(tuple(lists["W"]), tuple(lists["p"]))
    if family == "pareto":
        kv, keypos = _key_values(body, ",", colon + 1)
        extra = set(kv) - {"alpha", "xm"}
        if extra:
            k = sorted(extra)[0]
            raise ParseError(f"unknown pareto key {k!r}", keypos[k])
        if "alpha" not in kv:
            raise ParseError("pareto law needs alpha=...", len(text))
        alpha = _number(*kv["alpha"])
        xm = _number(*kv["xm"]) if "xm" in kv else 1.0
        return ParetoLaw(alpha, xm)
    raise ParseError(f"unknown law family {family!r}", 0)


def format_law(law: WeightLaw) -> str:
    """Inverse of parse_law (floats in shortest round-trip form)."""
    if isinstance(law, ParetoLaw):
        return f"pareto:alpha={law.alpha!r},xm={law.xm!r}"
    W = ",".join(repr(v) for v in law.values)
    p = ",".join(repr(v) for v in law.probs)
    return f"discrete:W={W};p={p}"


# ---------------------------------------------------------------------------
# records

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        s = format(float(v), ".17g")
        if math.isfinite(v) and not any(c in s for c in ".e"):
            s += ".0"
        return s
    s = str(v)
    if any(c in s for c in ',"\n'):
        raise SchemaError(f"string cell {s!r} needs quoting, which the writer does not do")
    return s


def parse_value(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if re.fullmatch(r"[-+]?\d+", s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def render(records: Iterable[dict], format: str = "csv", columns: Optional[list] = None,
           header: Optional[dict] = None) -> str:
    records = list(records)
    if format == "json":
        return "".join(json.dumps(r, default=_json_default) + "\n" for r in records)
    if format != "csv":
        raise SchemaError(f"unknown format {format!r}")
    if columns is None and records:
        columns = list(records[0])
    cols = set(columns or ())
    for k, r in enumerate(records):
        if set(r) != cols:
            raise SchemaError(f"record {k} has columns {sorted(r)}, expected {sorted(cols)}")
    buf = _io.StringIO()
    for key, val in (header or {}).items():
        # header values may hold law literals, so strings are written as-is
        buf.write(f"# {key}={val if isinstance(val, str) else format_value(val)}\n")
    if columns:
        buf.write(",".join(columns) + "\n")
    for r in records:
        buf.write(",".join(format_value(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def emit(records, format: str = "csv", path=None, columns=None, header=None) -> None:
    """Write records to ``path`` (None or '-' means stdout)."""
    text = render(records, format, columns, header)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as f:
            f.write(text)
    except OSError as e:
        raise IoError(str(e)) from e


def read_csv(path):
    """Read a file written by emit(format='csv'); returns (header dict, records)."""
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IoError(str(e)) from e
    header = {}
    k = 0
    while k < len(lines) and lines[k].startswith("# "):
        key, _, val = lines[k][2:].partition("=")
        header[key] = val
        k += 1
    if k == len(lines):
        return header, []
    columns = lines[k].split(",")
    records = []
    for line in lines[k + 1:]:
        cells = line.split(",")
        if len(cells) != len(columns):
            raise SchemaError(f"row has {len(cells)} cells, expected {len(columns)}")
        records.append({c: parse_value(v) for c, v in zip(columns, cells)})
    return header, records
