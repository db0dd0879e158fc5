"""CSV and JSON writers with deterministic formatting (15 significant digits)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.15g}"
    return str(v)


def _round(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, float):
        return v if not math.isfinite(v) else float(f"{v:.15g}")
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return _round(v.item())
    return v


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(_round(v)) for v in row])
    return path


def read_csv(path):
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def dumps(record) -> str:
    return json.dumps(_round(record), indent=2, allow_nan=True) + "\n"


def write_json(path, record) -> Path:
    path = Path(path)
    path.write_text(dumps(record), encoding="utf-8")
    return path


def modes_rows(table):
    """Rows family,m,n,lambda,multiplicity_in_level for a spectrum.ModeTable."""
    starts, _ = table.level_index()
    ends = list(starts[1:]) + [len(table)]
    mult = {}
    for s, e in zip(starts, ends):
        for i in range(s, e):
            mult[i] = e - s
    for i, mode in enumerate(table.modes()):
        yield [mode.family.value, mode.m, mode.n, mode.lam, mult[i]]


def loop_rows(table):
    for e in table.entries:
        word = e.words[0] if e.words else ()
        yield [e.r, e.multiplicity, " ".join(str(g) for g in word)]
