"""SVG and CSV renderings of result documents.

Output depends only on the document, so rendering the same result twice gives
byte-identical files.
"""

from __future__ import annotations

import csv
import io
from typing import Optional, Sequence

CANVAS = 600.0
MARGIN = 30.0

STYLES = {
    "target": 'fill="#d62728" fill-opacity="0.35" stroke="#d62728"',
    "obstacle": 'fill="none" stroke="#d62728" stroke-dasharray="4 2"',
    "initial": 'fill="none" stroke="#000000" stroke-width="2"',
    "estimate": 'fill="#1f77b4" fill-opacity="0.15" stroke="#1f77b4"',
}


class PlotError(ValueError):
    pass


def _dim(doc: dict) -> int:
    box = doc["target"]
    return box["dim"] if box.get("empty") else len(box["lower"])


def _resolve_axes(doc: dict, axes: Optional[Sequence[int]]) -> tuple[int, int]:
    dim = _dim(doc)
    if axes is None:
        if dim > 2:
            raise PlotError(f"result is {dim}-D; choose a projection with --axes i,j")
        return (0, 1) if dim == 2 else (0, 0)
    if len(axes) != 2 or any(not 0 <= a < dim for a in axes):
        raise PlotError(f"axes must be two indices in [0, {dim})")
    return int(axes[0]), int(axes[1])


def _shapes(doc: dict):
    yield "target", None, doc["target"]
    if doc.get("obstacle") is not None:
        yield "obstacle", None, doc["obstacle"]
    yield "initial", None, doc["initial_set"]
    for s in doc["sets"]:
        yield "estimate", s["step"], s


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(doc: dict, axes: Optional[Sequence[int]] = None) -> str:
    i, j = _resolve_axes(doc, axes)
    boxes = []
    for kind, step, box in _shapes(doc):
        if box.get("empty"):
            continue
        lo, hi = box["lower"], box["upper"]
        if i == j:  # 1-D: draw intervals as unit-height bars
            boxes.append((kind, step, lo[i], 0.0, hi[i], 1.0))
        else:
            boxes.append((kind, step, lo[i], lo[j], hi[i], hi[j]))

    x_min = min(b[2] for b in boxes)
    y_min = min(b[3] for b in boxes)
    x_max = max(b[4] for b in boxes)
    y_max = max(b[5] for b in boxes)
    span = max(x_max - x_min, y_max - y_min, 1e-9)
    scale = (CANVAS - 2 * MARGIN) / span

    def px(x):
        return MARGIN + (x - x_min) * scale

    def py(y):
        return CANVAS - MARGIN - (y - y_min) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(CANVAS)}" height="{int(CANVAS)}" '
        f'viewBox="0 0 {int(CANVAS)} {int(CANVAS)}">',
        f'<title>{doc.get("scenario", "")} ({doc["mode"]}, verdict {doc["verdict"]["status"]})</title>',
        f'<text x="{_fmt(MARGIN)}" y="{_fmt(MARGIN / 2)}" font-size="12">'
        f'mode={doc["mode"]} verdict={doc["verdict"]["status"]} axes={i},{j}</text>',
    ]
    for kind, step, x0, y0, x1, y1 in boxes:
        attrs = f' data-step="{step}"' if step is not None else ""
        lines.append(
            f'<rect class="{kind}"{attrs} x="{_fmt(px(x0))}" y="{_fmt(py(y1))}" '
            f'width="{_fmt((x1 - x0) * scale)}" height="{_fmt((y1 - y0) * scale)}" {STYLES[kind]}/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_csv(doc: dict) -> str:
    """One row per estimate per step: step, kind, empty flag, then bounds per axis."""
    dim = _dim(doc)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["step", "set", "empty"]
        + [f"lower_{a}" for a in range(dim)]
        + [f"upper_{a}" for a in range(dim)]
    )
    for s in doc["sets"]:
        if s.get("empty"):
            writer.writerow([s["step"], "estimate", 1] + [""] * (2 * dim))
        else:
            writer.writerow(
                [s["step"], "estimate", 0] + [repr(v) for v in s["lower"]] + [repr(v) for v in s["upper"]]
            )
    return buf.getvalue()
