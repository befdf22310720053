"""Deterministic CSV / JSON / SVG writers for experiment results."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = columns(rows)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def to_json(name: str, params: dict, rows: list[dict], passed: bool) -> str:
    doc = {"experiment": name, "params": _jsonable(params), "passed": bool(passed), "rows": _jsonable(rows)}
    return json.dumps(doc, indent=2) + "\n"


def to_svg(name: str, rows: list[dict], width: int = 640, height: int = 360) -> str:
    """Estimate (dots) and bound (line) against row index."""
    pts = [(i, row.get("estimate"), row.get("bound")) for i, row in enumerate(rows)]
    values = [v for _, e, b in pts for v in (e, b) if isinstance(v, (int, float)) and math.isfinite(v)]
    top = max(values) if values else 1.0
    top = top if top > 0 else 1.0
    pad = 40
    n = max(len(pts) - 1, 1)

    def xy(i, v):
        return pad + (width - 2 * pad) * i / n, height - pad - (height - 2 * pad) * v / top

    dots, line = [], []
    for i, e, b in pts:
        if isinstance(e, (int, float)) and math.isfinite(e):
            x, y = xy(i, e)
            dots.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="#1f77b4"/>')
        if isinstance(b, (int, float)) and math.isfinite(b):
            x, y = xy(i, b)
            line.append(f"{x:.2f},{y:.2f}")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{pad}" y="20" font-family="sans-serif" font-size="13">{name}: estimate (dots) vs bound (line)</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="4" y="{pad + 4}" font-family="sans-serif" font-size="10">{top:.3g}</text>',
    ]
    if line:
        parts.append(f'<polyline points="{" ".join(line)}" fill="none" stroke="#d62728"/>')
    parts += dots
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(out_dir, name: str, params: dict, rows: list[dict], passed: bool, formats) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        path = out / f"{name}.{fmt}"
        if fmt == "csv":
            text = to_csv(rows)
        elif fmt == "json":
            text = to_json(name, params, rows, passed)
        elif fmt == "svg":
            text = to_svg(name, rows)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
