"""Deterministic JSON / CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from typing import Iterable, Mapping, Sequence


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    return obj


def to_json_text(report) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def to_csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def flatten(report: Mapping, prefix: str = "") -> dict:
    """Nested dict -> dotted keys, for one-row CSV output."""
    out = {}
    for k in sorted(report):
        v = report[k]
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(_clean(v), separators=(",", ":"))
        else:
            out[key] = "" if v is None else v
    return out


def emit_report(report, fmt: str = "json", path=None, header: Sequence[str] | None = None) -> str:
    """Write ``report`` to ``path`` (stdout when None) and return the text.

    JSON: key-sorted, indented.  CSV: ``report`` is a list of rows under
    ``header``, or a dict that is flattened into a single row.
    """
    if fmt == "json":
        text = to_json_text(report)
    elif fmt == "csv":
        if header is not None:
            text = to_csv_text(header, report)
        else:
            flat = flatten(_clean(report))
            text = to_csv_text(list(flat), [list(flat.values())])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
