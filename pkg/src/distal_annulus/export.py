"""Atomic file output, JSON reports and SVG renderings of annulus curves."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from .annulus_core import TWO_PI, CurveSample

SCHEMA_VERSION = 1
SVG_OUTER_PX = 512


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def report_json(payload: dict) -> str:
    body = {"schema": SCHEMA_VERSION}
    body.update(_jsonable(payload))
    return json.dumps(body, indent=2) + "\n"


def write_report(path: str | Path, payload: dict) -> None:
    atomic_write_text(path, report_json(payload))


def write_rows_csv(path: str | Path, header: Iterable[str], columns: Iterable[np.ndarray],
                   formats: Iterable[str]) -> None:
    cols = [np.asarray(c) for c in columns]
    fmts = list(formats)
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(f % v for f, v in zip(fmts, row)))
    atomic_write_text(path, "\n".join(lines) + "\n")


def curves_svg(curves: Iterable[CurveSample], colors: Iterable[str] | None = None) -> str:
    """Render curves on the planar annulus; polylines drawn exactly as sampled."""
    curves = list(curves)
    colors = list(colors) if colors is not None else ["#c0392b"] * len(curves)
    scale = SVG_OUTER_PX / 2.0
    size = 2 * SVG_OUTER_PX + 20
    c = size / 2

    def to_px(x, y):
        ang = TWO_PI * np.asarray(x)
        return c + scale * y * np.cos(ang), c - scale * y * np.sin(ang)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle cx="{c}" cy="{c}" r="{2 * scale}" fill="none" stroke="#444" stroke-width="1"/>',
        f'<circle cx="{c}" cy="{c}" r="{scale}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for curve, color in zip(curves, colors):
        px, py = to_px(curve.x, curve.y)
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path: str | Path, curves: Iterable[CurveSample], colors=None) -> None:
    atomic_write_text(path, curves_svg(curves, colors))
