"""JSON and CSV writers for experiment reports.

Reports are plain dicts. ``+-inf`` are written as the strings ``"inf"`` and
``"-inf"``, NaN as ``null``; keys are sorted so that identical inputs give
byte-identical files apart from the ``timestamp`` field.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA = 1


def plain(obj):
    """Recursively convert to JSON-safe builtins."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return plain(obj.to_dict())
        return plain({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)
                      if f.repr})
    if isinstance(obj, dict):
        return {str(_key(k)): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _key(k):
    if isinstance(k, tuple):
        return " ".join(str(_key(x)) for x in k)
    return plain(k)


def from_plain(x):
    """Inverse of the inf encoding (for reading reports back)."""
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if isinstance(x, dict):
        return {k: from_plain(v) for k, v in x.items()}
    if isinstance(x, list):
        return [from_plain(v) for v in x]
    return x


def make_report(kind, config, result, verdict, timestamp=None):
    ts = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return {"schema": SCHEMA, "kind": kind, "config": plain(config), "verdict": verdict,
            "result": plain(result), "timestamp": ts}


def dumps(report):
    return json.dumps(plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timestamp(text):
    """Report JSON text with the timestamp removed, for comparisons."""
    d = json.loads(text)
    d.pop("timestamp", None)
    return json.dumps(d, sort_keys=True)


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` through a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, report):
    return atomic_write(path, dumps(report))


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _cell(x):
    x = plain(x)
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return x


def write_csv(path, header, rows):
    return atomic_write(path, csv_text(header, rows))
